#include "choreo/env.hpp"

namespace choreo {

double geometry_width(ObjectGeometry g) {
  switch (g) {
    case ObjectGeometry::kBlock:
      return 0.02;
    case ObjectGeometry::kThinCylinder:
      return 0.01;
    case ObjectGeometry::kSmallBox:
      return 0.015;
  }
  throw ContractViolation("geometry_width: unknown geometry");
}

const char* geometry_name(ObjectGeometry g) {
  switch (g) {
    case ObjectGeometry::kBlock:
      return "block";
    case ObjectGeometry::kThinCylinder:
      return "thin_cylinder";
    case ObjectGeometry::kSmallBox:
      return "small_box";
  }
  throw ContractViolation("geometry_name: unknown geometry");
}

ObjectGeometry geometry_from_name(const std::string& name) {
  if (name == "block") return ObjectGeometry::kBlock;
  if (name == "thin_cylinder") return ObjectGeometry::kThinCylinder;
  if (name == "small_box") return ObjectGeometry::kSmallBox;
  throw ConfigError("unknown geometry: " + name);
}

KinematicEnv::KinematicEnv(EnvConfig cfg, ObjectGeometry geometry) : cfg_(std::move(cfg)) {
  require(cfg_.eta > 0.0 && cfg_.aperture_scale > 0.0, "EnvConfig: step scales must be positive");
  require(cfg_.horizon > 0, "EnvConfig: horizon must be positive");
  state_.geometry = geometry;
}

void KinematicEnv::reset(Rng& rng) {
  // Sequenced draws; constructor argument order would be unspecified.
  const double ox = rng.uniform(cfg_.spawn_lo, cfg_.spawn_hi);
  const double oy = rng.uniform(cfg_.spawn_lo, cfg_.spawn_hi);
  const double gx = rng.uniform(cfg_.spawn_lo, cfg_.spawn_hi);
  const double gy = rng.uniform(cfg_.spawn_lo, cfg_.spawn_hi);
  const double gz = rng.uniform(cfg_.goal_z_lo, cfg_.goal_z_hi);
  reset_to(Vec3(ox, oy, 0.0), Vec3(gx, gy, gz));
}

void KinematicEnv::reset_to(const Vec3& object, const Vec3& goal) {
  const ObjectGeometry geom = state_.geometry;
  state_ = EnvState{};
  state_.geometry = geom;
  state_.gripper = cfg_.home;
  state_.aperture = cfg_.aperture_max;
  state_.object = object;
  state_.object_start = object;
  state_.goal = goal;
}

void KinematicEnv::step(const Action& action) {
  if (!action.allFinite()) throw NumericError("KinematicEnv::step: non-finite action");
  Action a = action;
  for (int i = 0; i < 4; ++i) a[i] = clamp(a[i], -1.0, 1.0);

  const Vec3 gripper_before = state_.gripper;
  const Vec3 object_before = state_.object;

  for (int i = 0; i < 3; ++i) {
    state_.gripper[i] = clamp(gripper_before[i] + cfg_.eta * a[i], cfg_.workspace_lo[i],
                              cfg_.workspace_hi[i]);
  }
  state_.aperture = clamp(state_.aperture + cfg_.aperture_scale * a[3], 0.0, cfg_.aperture_max);

  const double width = geometry_width(state_.geometry);
  if (state_.attached) {
    if (state_.aperture > width + cfg_.grip_tol) {
      state_.attached = false;
      state_.object = Vec3(state_.gripper.x(), state_.gripper.y(), 0.0);
    } else {
      state_.object = state_.gripper;
    }
  } else if (!state_.grasp_failed &&
             (state_.gripper - state_.object).norm() <= cfg_.r_grasp) {
    if (state_.aperture >= width && state_.aperture <= width + cfg_.grip_tol) {
      state_.attached = true;
      state_.object = state_.gripper;
    } else if (state_.aperture < width - cfg_.crush_tol) {
      state_.grasp_failed = true;
    }
  }

  state_.gripper_vel = state_.gripper - gripper_before;
  state_.object_vel = state_.object - object_before;
  state_.t += 1;
}

Vec KinematicEnv::observation() const {
  Vec obs(kObsDim);
  obs.segment<3>(0) = state_.gripper;
  obs[3] = state_.aperture;
  obs.segment<3>(4) = state_.object;
  obs.segment<3>(7) = state_.object - state_.gripper;
  obs.segment<3>(10) = state_.gripper_vel;
  obs.segment<3>(13) = state_.object_vel;
  obs[16] = state_.attached ? 1.0 : 0.0;
  return obs;
}

}  // namespace choreo
