#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "choreo/env.hpp"

namespace choreo {

// The pick-and-place task decomposes into three subtasks with fixed step
// budgets. The canonical episode runs them back to back: approach steps
// [0,15), manipulate [15,25), retract [25,50).
enum class Subtask { kApproach = 0, kManipulate = 1, kRetract = 2 };
inline constexpr int kNumSubtasks = 3;
inline constexpr std::array<Subtask, 3> kAllSubtasks = {
    Subtask::kApproach, Subtask::kManipulate, Subtask::kRetract};

const char* subtask_name(Subtask st);
Subtask subtask_from_name(const std::string& name);

int subtask_budget(Subtask st);        // 15, 10, 25
int subtask_window_start(Subtask st);  // 0, 15, 25
inline constexpr int kEpisodeLength = 50;
inline constexpr double kLiftHeight = 0.05;
inline constexpr int kMaxSequenceLength = 6;

// What each expert is judged on: the approach expert moves the gripper, the
// other two move the object.
Vec3 achieved_goal(Subtask st, const EnvState& s);

// Where each expert is asked to put it: the object for approach, a lift point
// above the object's spawn position for manipulate, the episode goal for
// retract.
Vec3 subgoal(Subtask st, const EnvState& s);

double compute_reward(const Vec3& achieved, const Vec3& goal);
bool is_success(const Vec3& achieved, const Vec3& goal, double eps);

// Monotone count of compute_reward calls in this process, so tests can
// assert that a code path never touches the reward signal.
long reward_call_count();

// A policy maps (observation, goal) to an action. Oracles and trained
// networks share this shape so they can be mixed freely in one episode.
using SubtaskPolicy = std::function<Action(const Vec& obs, const Vec3& goal)>;

// Scripted experts. Approach steers toward the object with the fingers held
// open; manipulate closes the grip in place until the object attaches, then
// lifts; retract carries toward the goal with the grip held shut and makes no
// attempt to recover a missed grasp. Closing runs at full rate while safe and
// takes one scaled final step to land mid attach-window, which a fixed rate
// would jump across.
SubtaskPolicy make_oracle_policy(Subtask st, const EnvConfig& cfg, ObjectGeometry geometry);

std::array<SubtaskPolicy, 3> make_oracle_policies(const EnvConfig& cfg,
                                                  ObjectGeometry geometry);

struct StepRecord {
  int step = 0;
  Subtask subtask = Subtask::kApproach;
  Vec obs;
  Vec3 goal;
  Action action;
  Vec3 achieved;
  double reward = 0.0;
  bool attached = false;
};

struct SequenceResult {
  bool success = false;           // object within eps of the episode goal
  int steps = 0;                  // env steps actually taken
  std::vector<bool> entry_success;  // per sequence entry, at its last step
  std::vector<StepRecord> trace;
};

struct SequenceOptions {
  bool record = false;
  bool run_full_horizon = false;  // keep stepping after task success
  int max_env_steps = -1;         // <0: no cap beyond the sequence budgets
};

// Plays the given subtask sequence on a freshly reset env, each entry for its
// step budget. The episode ends early once the object reaches the goal
// (unless run_full_horizon) or when max_env_steps is hit. Sequences longer
// than the choreographer's horizon cap are rejected.
SequenceResult run_sequence_episode(KinematicEnv& env,
                                    const std::array<SubtaskPolicy, 3>& policies,
                                    const std::vector<Subtask>& sequence,
                                    const SequenceOptions& opts = {});

struct CompositeResult {
  bool success = false;
  int steps = 0;
  std::array<bool, 3> subtask_success{};
  std::vector<StepRecord> trace;
};

// The canonical approach -> manipulate -> retract episode.
CompositeResult run_composite_episode(KinematicEnv& env,
                                      const std::array<SubtaskPolicy, 3>& policies,
                                      bool record = false, bool run_full_horizon = false);

// Advances a freshly reset env through the windows before `st` using the
// given policies, leaving it positioned at the start of st's window.
void run_window_prefix(KinematicEnv& env, Subtask st,
                       const std::array<SubtaskPolicy, 3>& policies);

// Fraction of `episodes` canonical episodes ending in task success when the
// tested subtask runs under `policy` (deterministically) and the other two
// run under their oracles.
double evaluate_lse(const SubtaskPolicy& policy, Subtask tested, const EnvConfig& cfg,
                    ObjectGeometry geometry, int episodes, Rng& rng);

// Same protocol with a caller-supplied policy for every subtask.
double evaluate_policy_set(const std::array<SubtaskPolicy, 3>& policies,
                           const EnvConfig& cfg, ObjectGeometry geometry, int episodes,
                           Rng& rng);

}  // namespace choreo
