#include "choreo/subtask.hpp"

#include <atomic>

namespace choreo {

namespace {
std::atomic<long> g_reward_calls{0};
}  // namespace

long reward_call_count() { return g_reward_calls.load(std::memory_order_relaxed); }

const char* subtask_name(Subtask st) {
  switch (st) {
    case Subtask::kApproach:
      return "approach";
    case Subtask::kManipulate:
      return "manipulate";
    case Subtask::kRetract:
      return "retract";
  }
  throw ContractViolation("subtask_name: unknown subtask");
}

Subtask subtask_from_name(const std::string& name) {
  if (name == "approach") return Subtask::kApproach;
  if (name == "manipulate") return Subtask::kManipulate;
  if (name == "retract") return Subtask::kRetract;
  throw ConfigError("unknown subtask: " + name);
}

int subtask_budget(Subtask st) {
  switch (st) {
    case Subtask::kApproach:
      return 15;
    case Subtask::kManipulate:
      return 10;
    case Subtask::kRetract:
      return 25;
  }
  throw ContractViolation("subtask_budget: unknown subtask");
}

int subtask_window_start(Subtask st) {
  switch (st) {
    case Subtask::kApproach:
      return 0;
    case Subtask::kManipulate:
      return 15;
    case Subtask::kRetract:
      return 25;
  }
  throw ContractViolation("subtask_window_start: unknown subtask");
}

Vec3 achieved_goal(Subtask st, const EnvState& s) {
  return st == Subtask::kApproach ? s.gripper : s.object;
}

Vec3 subgoal(Subtask st, const EnvState& s) {
  switch (st) {
    case Subtask::kApproach:
      return s.object;
    case Subtask::kManipulate:
      return s.object_start + Vec3(0.0, 0.0, kLiftHeight);
    case Subtask::kRetract:
      return s.goal;
  }
  throw ContractViolation("subgoal: unknown subtask");
}

double compute_reward(const Vec3& achieved, const Vec3& goal) {
  g_reward_calls.fetch_add(1, std::memory_order_relaxed);
  return -(achieved - goal).norm();
}

bool is_success(const Vec3& achieved, const Vec3& goal, double eps) {
  return (achieved - goal).norm() < eps;
}

namespace {

Vec3 toward(const Vec3& from, const Vec3& to, double eta) {
  Vec3 a = (to - from) / eta;
  for (int i = 0; i < 3; ++i) a[i] = clamp(a[i], -1.0, 1.0);
  return a;
}

// Close toward the middle of the attach window. A full-rate step is taken
// while it still stays at or above the target aperture; the last step is
// scaled so the post-step aperture lands exactly on it.
double closing_grip(double aperture, const EnvConfig& cfg, double width) {
  const double target = width + 0.5 * cfg.grip_tol;
  if (aperture <= target) return 0.0;
  if (aperture - cfg.aperture_scale >= target) return -1.0;
  return (target - aperture) / cfg.aperture_scale;
}

}  // namespace

SubtaskPolicy make_oracle_policy(Subtask st, const EnvConfig& cfg, ObjectGeometry geometry) {
  const double width = geometry_width(geometry);
  switch (st) {
    case Subtask::kApproach:
      return [cfg](const Vec& obs, const Vec3& goal) {
        Action a = Action::Zero();
        a.head<3>() = toward(obs.segment<3>(0), goal, cfg.eta);
        a[3] = 1.0;
        return a;
      };
    case Subtask::kManipulate:
      return [cfg, width](const Vec& obs, const Vec3& goal) {
        Action a = Action::Zero();
        if (obs[16] > 0.5) {
          a.head<3>() = toward(obs.segment<3>(0), goal, cfg.eta);
          a[3] = -1.0;
        } else {
          a[3] = closing_grip(obs[3], cfg, width);
        }
        return a;
      };
    case Subtask::kRetract:
      return [cfg](const Vec& obs, const Vec3& goal) {
        Action a = Action::Zero();
        a.head<3>() = toward(obs.segment<3>(0), goal, cfg.eta);
        a[3] = -1.0;
        return a;
      };
  }
  throw ContractViolation("make_oracle_policy: unknown subtask");
}

std::array<SubtaskPolicy, 3> make_oracle_policies(const EnvConfig& cfg,
                                                  ObjectGeometry geometry) {
  return {make_oracle_policy(Subtask::kApproach, cfg, geometry),
          make_oracle_policy(Subtask::kManipulate, cfg, geometry),
          make_oracle_policy(Subtask::kRetract, cfg, geometry)};
}

SequenceResult run_sequence_episode(KinematicEnv& env,
                                    const std::array<SubtaskPolicy, 3>& policies,
                                    const std::vector<Subtask>& sequence,
                                    const SequenceOptions& opts) {
  require(env.state().t == 0, "run_sequence_episode: env must be freshly reset");
  require(static_cast<int>(sequence.size()) <= kMaxSequenceLength,
          "run_sequence_episode: sequence exceeds the horizon cap");
  SequenceResult result;
  const double eps = env.config().eps_success;
  bool done = is_success(env.state().object, env.state().goal, eps) && !opts.run_full_horizon;

  for (Subtask st : sequence) {
    if (done) break;
    if (opts.max_env_steps >= 0 && result.steps >= opts.max_env_steps) break;
    const int idx = static_cast<int>(st);
    bool reached = false;
    for (int k = 0; k < subtask_budget(st); ++k) {
      const Vec obs = env.observation();
      const Vec3 goal = subgoal(st, env.state());
      const Action action = policies[idx](obs, goal);
      env.step(action);
      result.steps += 1;
      const Vec3 achieved = achieved_goal(st, env.state());
      reached = is_success(achieved, goal, eps);
      if (opts.record) {
        result.trace.push_back({env.state().t - 1, st, obs, goal, action, achieved,
                                compute_reward(achieved, goal), env.state().attached});
      }
      if (is_success(env.state().object, env.state().goal, eps) && !opts.run_full_horizon) {
        done = true;
        break;
      }
      if (opts.max_env_steps >= 0 && result.steps >= opts.max_env_steps) break;
    }
    result.entry_success.push_back(reached);
  }
  result.success = is_success(env.state().object, env.state().goal, eps);
  return result;
}

CompositeResult run_composite_episode(KinematicEnv& env,
                                      const std::array<SubtaskPolicy, 3>& policies,
                                      bool record, bool run_full_horizon) {
  SequenceOptions opts;
  opts.record = record;
  opts.run_full_horizon = run_full_horizon;
  SequenceResult seq = run_sequence_episode(
      env, policies, {Subtask::kApproach, Subtask::kManipulate, Subtask::kRetract}, opts);
  CompositeResult result;
  result.success = seq.success;
  result.steps = seq.steps;
  result.trace = std::move(seq.trace);
  for (size_t i = 0; i < seq.entry_success.size(); ++i)
    result.subtask_success[i] = seq.entry_success[i];
  return result;
}

void run_window_prefix(KinematicEnv& env, Subtask st,
                       const std::array<SubtaskPolicy, 3>& policies) {
  require(env.state().t == 0, "run_window_prefix: env must be freshly reset");
  for (Subtask prev : kAllSubtasks) {
    if (prev == st) break;
    const int idx = static_cast<int>(prev);
    const int end = subtask_window_start(prev) + subtask_budget(prev);
    while (env.state().t < end) {
      const Vec obs = env.observation();
      env.step(policies[idx](obs, subgoal(prev, env.state())));
    }
  }
}

double evaluate_lse(const SubtaskPolicy& policy, Subtask tested, const EnvConfig& cfg,
                    ObjectGeometry geometry, int episodes, Rng& rng) {
  auto policies = make_oracle_policies(cfg, geometry);
  policies[static_cast<int>(tested)] = policy;
  return evaluate_policy_set(policies, cfg, geometry, episodes, rng);
}

double evaluate_policy_set(const std::array<SubtaskPolicy, 3>& policies,
                           const EnvConfig& cfg, ObjectGeometry geometry, int episodes,
                           Rng& rng) {
  require(episodes > 0, "evaluate_policy_set: episodes must be positive");
  KinematicEnv env(cfg, geometry);
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(rng);
    successes += run_composite_episode(env, policies).success ? 1 : 0;
  }
  return static_cast<double>(successes) / episodes;
}

}  // namespace choreo
