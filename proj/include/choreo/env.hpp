#pragma once

#include <string>

#include "choreo/common.hpp"
#include "choreo/rng.hpp"

namespace choreo {

enum class ObjectGeometry { kBlock, kThinCylinder, kSmallBox };

double geometry_width(ObjectGeometry g);
const char* geometry_name(ObjectGeometry g);
ObjectGeometry geometry_from_name(const std::string& name);

// Geometry of the pick-and-place world. Positions live in a box workspace,
// the gripper moves at most eta per step, the aperture at most aperture_scale.
struct EnvConfig {
  double eta = 0.05;
  double aperture_scale = 0.02;
  double aperture_max = 0.05;
  double r_grasp = 0.03;
  double grip_tol = 0.005;
  double crush_tol = 0.005;
  double eps_success = 0.05;
  int horizon = 50;
  Vec3 workspace_lo{0.0, 0.0, 0.0};
  Vec3 workspace_hi{1.0, 1.0, 0.5};
  Vec3 home{0.5, 0.5, 0.3};
  double spawn_lo = 0.2;
  double spawn_hi = 0.8;
  double goal_z_lo = 0.05;
  double goal_z_hi = 0.3;
};

struct EnvState {
  Vec3 gripper{0.0, 0.0, 0.0};
  double aperture = 0.0;
  Vec3 object{0.0, 0.0, 0.0};
  Vec3 gripper_vel{0.0, 0.0, 0.0};
  Vec3 object_vel{0.0, 0.0, 0.0};
  bool attached = false;
  bool grasp_failed = false;  // crushed the object; permanent for the episode
  int t = 0;
  Vec3 goal{0.0, 0.0, 0.0};
  Vec3 object_start{0.0, 0.0, 0.0};
  ObjectGeometry geometry = ObjectGeometry::kBlock;
};

// [dx, dy, dz, grip], every component in [-1, 1]. Positive grip opens the
// fingers, negative closes them.
using Action = Eigen::Vector4d;

// Deterministic kinematic stand-in for a physics simulator. One step:
//   1. gripper += eta * a.xyz, clamped to the workspace
//   2. aperture += aperture_scale * a.grip, clamped to [0, aperture_max]
//   3. attached object follows the gripper exactly; it detaches and drops to
//      the ground if the aperture opens past width + grip_tol
//   4. a free object within r_grasp attaches (and snaps to the gripper) when
//      the aperture lands inside [width, width + grip_tol]; squeezing below
//      width - crush_tol at that range crushes it, which permanently disables
//      grasping for the episode
// Attach conditions look at post-step values only; there is no sweep through
// intermediate apertures.
class KinematicEnv {
 public:
  static constexpr int kObsDim = 17;

  explicit KinematicEnv(EnvConfig cfg, ObjectGeometry geometry = ObjectGeometry::kBlock);

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  EnvState& mutable_state() { return state_; }
  ObjectGeometry geometry() const { return state_.geometry; }

  // Gripper home and open, object on the ground in the spawn square, goal in
  // the air above it. Draw order: object x, y, then goal x, y, z.
  void reset(Rng& rng);

  // Deterministic variant used by scripted tests.
  void reset_to(const Vec3& object, const Vec3& goal);

  void step(const Action& action);

  // [gripper(3), aperture, object(3), object - gripper(3), gripper_vel(3),
  //  object_vel(3), attached]
  Vec observation() const;

 private:
  EnvConfig cfg_;
  EnvState state_;
};

}  // namespace choreo
