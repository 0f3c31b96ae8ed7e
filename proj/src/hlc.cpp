#include "choreo/hlc.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "choreo/checkpoint.hpp"

namespace choreo {

Vec hlc_observation(const KinematicEnv& env, int selections_made) {
  Vec v(kHlcObsDim);
  v.head(KinematicEnv::kObsDim) = env.observation();
  v.segment<3>(KinematicEnv::kObsDim) = env.state().goal;
  v[kHlcObsDim - 1] = static_cast<double>(selections_made) / kMaxSequenceLength;
  require(all_finite(v), "hlc_observation: non-finite entries");
  return v;
}

double hlc_reward(bool final_success, bool terminal) {
  return (terminal && final_success) ? 1.0 : 0.0;
}

std::vector<double> compute_gae(const std::vector<double>& rewards,
                                const std::vector<double>& values, double gamma,
                                double lambda) {
  require(values.size() == rewards.size() + 1,
          "compute_gae: values must carry one bootstrap entry past the rewards");
  require(gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0,
          "compute_gae: gamma and lambda must lie in [0, 1]");
  const int n = static_cast<int>(rewards.size());
  std::vector<double> advantages(n);
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    acc = delta + gamma * lambda * acc;
    advantages[t] = acc;
  }
  return advantages;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n);
  for (double& a : advantages) a = (a - mean) / (stddev + 1e-8);
}

namespace {

int sample_action(const Vec& pi, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i < pi.size(); ++i) {
    cum += pi[i];
    if (u < cum) return i;
  }
  return static_cast<int>(pi.size()) - 1;
}

int argmax_action(const Vec& pi) {
  int best = 0;
  for (int i = 1; i < pi.size(); ++i) {
    if (pi[i] > pi[best]) best = i;
  }
  return best;
}

}  // namespace

HlcTrajectory run_hlc_episode(const RecurrentPolicyParameters& params,
                              const std::array<SubtaskPolicy, 3>& lse_policies,
                              const EnvConfig& env_cfg, ObjectGeometry geometry, Rng& rng,
                              const HlcEpisodeOptions& opts) {
  for (const auto& p : lse_policies) {
    if (!p) throw ConfigError("run_hlc_episode: missing subtask policy");
  }
  KinematicEnv env(env_cfg, geometry);
  env.reset(rng);
  const double eps = env_cfg.eps_success;

  HlcTrajectory traj;
  Vec h = Vec::Zero(params.spec().hidden_dim);
  for (int sel = 0; sel < kMaxSequenceLength; ++sel) {
    HlcStep step;
    step.obs = hlc_observation(env, sel);
    const RecurrentStepCache cache = recurrent_step(params, step.obs, h);
    h = cache.h;
    if (opts.forced != nullptr && !opts.forced->empty()) {
      const size_t idx = std::min(static_cast<size_t>(sel), opts.forced->size() - 1);
      step.action = static_cast<int>((*opts.forced)[idx]);
    } else if (opts.greedy) {
      step.action = argmax_action(cache.pi);
    } else {
      step.action = sample_action(cache.pi, rng);
    }
    step.log_prob = std::log(std::max(cache.pi[step.action], 1e-300));
    step.value = cache.value;

    const Subtask st = static_cast<Subtask>(step.action);
    const SubtaskPolicy& policy = lse_policies[step.action];
    bool success = false;
    for (int k = 0; k < subtask_budget(st) && traj.env_steps < kHlcEnvStepCap; ++k) {
      const Vec obs = env.observation();
      const Vec3 goal = subgoal(st, env.state());
      env.step(policy(obs, goal));
      traj.env_steps += 1;
      success = is_success(env.state().object, env.state().goal, eps);
      if (success) break;
    }

    step.terminal =
        success || sel == kMaxSequenceLength - 1 || traj.env_steps >= kHlcEnvStepCap;
    step.reward = hlc_reward(success, step.terminal);
    traj.steps.push_back(std::move(step));
    if (traj.steps.back().terminal) {
      traj.success = success;
      break;
    }
  }
  return traj;
}

HlcLosses hlc_loss_grad(const RecurrentPolicyParameters& params,
                        const std::vector<HlcTrajectory>& batch,
                        const std::vector<double>& advantages, const GaeConfig& cfg,
                        Vec& grad_out) {
  size_t total_steps = 0;
  for (const auto& traj : batch) total_steps += traj.steps.size();
  require(advantages.size() == total_steps,
          "hlc_loss_grad: one advantage per step is required");

  HlcLosses losses;
  grad_out = Vec::Zero(params.flat().size());
  size_t offset = 0;
  for (const auto& traj : batch) {
    const int n = static_cast<int>(traj.steps.size());
    std::vector<Vec> xs(n);
    for (int t = 0; t < n; ++t) xs[t] = traj.steps[t].obs;
    const auto caches =
        recurrent_forward(params, xs, Vec::Zero(params.spec().hidden_dim));

    // Discounted returns; terminal trajectories bootstrap from zero.
    std::vector<double> returns(n);
    double acc = 0.0;
    for (int t = n - 1; t >= 0; --t) {
      acc = traj.steps[t].reward + cfg.gamma * acc;
      returns[t] = acc;
    }

    std::vector<Vec> d_logits(n);
    std::vector<double> d_value(n);
    for (int t = 0; t < n; ++t) {
      const Vec& pi = caches[t].pi;
      const int a = traj.steps[t].action;
      const double adv = advantages[offset + t];
      const double log_pi_a = std::log(std::max(pi[a], 1e-300));
      losses.actor -= adv * log_pi_a;

      double entropy = 0.0;
      for (int i = 0; i < pi.size(); ++i) {
        if (pi[i] > 0.0) entropy -= pi[i] * std::log(pi[i]);
      }
      losses.entropy += entropy;

      const double v = caches[t].value;
      losses.value += cfg.value_coef * (returns[t] - v) * (returns[t] - v);

      Vec d(pi.size());
      for (int i = 0; i < pi.size(); ++i) {
        const double onehot = i == a ? 1.0 : 0.0;
        const double log_pi_i = std::log(std::max(pi[i], 1e-300));
        d[i] = adv * (pi[i] - onehot) +
               cfg.entropy_coef * pi[i] * (log_pi_i + entropy);
      }
      d_logits[t] = d;
      d_value[t] = 2.0 * cfg.value_coef * (v - returns[t]);
    }
    grad_out += recurrent_backward(params, caches, d_logits, d_value);
    offset += static_cast<size_t>(n);
  }
  losses.total = losses.actor - cfg.entropy_coef * losses.entropy + losses.value;
  return losses;
}

HlcLosses hlc_update(RecurrentPolicyParameters& params, AdamState& adam,
                     const AdamConfig& adam_cfg, const std::vector<HlcTrajectory>& batch,
                     const GaeConfig& cfg) {
  std::vector<double> advantages;
  for (const auto& traj : batch) {
    const int n = static_cast<int>(traj.steps.size());
    std::vector<double> rewards(n), values(n + 1);
    for (int t = 0; t < n; ++t) {
      rewards[t] = traj.steps[t].reward;
      values[t] = traj.steps[t].value;
    }
    values[n] = 0.0;
    const auto adv = compute_gae(rewards, values, cfg.gamma, cfg.lambda);
    advantages.insert(advantages.end(), adv.begin(), adv.end());
  }
  normalize_advantages(advantages);

  Vec grad;
  const HlcLosses losses = hlc_loss_grad(params, batch, advantages, cfg, grad);
  if (!std::isfinite(losses.total) || !all_finite(grad)) {
    throw NumericError("hlc_update: loss or gradient is not finite");
  }
  adam_update(params.flat(), grad, adam, adam_cfg);
  return losses;
}

HlcEvalResult evaluate_hlc(const RecurrentPolicyParameters& params,
                           const std::array<SubtaskPolicy, 3>& lse_policies,
                           const EnvConfig& env_cfg, ObjectGeometry geometry, int episodes,
                           Rng& rng) {
  require(episodes > 0, "evaluate_hlc: episodes must be positive");
  static const std::vector<Subtask> canonical = {Subtask::kApproach, Subtask::kManipulate,
                                                 Subtask::kRetract};
  HlcEpisodeOptions opts;
  opts.greedy = true;
  int successes = 0, exact = 0;
  for (int e = 0; e < episodes; ++e) {
    const HlcTrajectory traj =
        run_hlc_episode(params, lse_policies, env_cfg, geometry, rng, opts);
    successes += traj.success ? 1 : 0;
    bool match = traj.steps.size() == canonical.size();
    for (size_t i = 0; match && i < canonical.size(); ++i) {
      match = traj.steps[i].action == static_cast<int>(canonical[i]);
    }
    exact += match ? 1 : 0;
  }
  return {static_cast<double>(successes) / episodes,
          static_cast<double>(exact) / episodes};
}

HlcTrainResult train_hlc(const EnvConfig& env_cfg, ObjectGeometry geometry,
                         const std::array<SubtaskPolicy, 3>& lse_policies,
                         const HlcTrainConfig& cfg, Rng& rng,
                         const HlcTrainCallbacks& callbacks) {
  require(cfg.gae.workers > 0 && cfg.gae.rollouts_per_update > 0,
          "train_hlc: workers and rollouts must be positive");
  require(cfg.gae.rollouts_per_update % cfg.gae.workers == 0,
          "train_hlc: rollouts_per_update must split evenly across workers");
  for (const auto& p : lse_policies) {
    if (!p) throw ConfigError("train_hlc: missing subtask policy");
  }

  RecurrentPolicyParameters params(cfg.spec);
  {
    Rng init_rng = rng.fork(0);
    params.init(init_rng);
  }
  AdamState adam(static_cast<int>(params.flat().size()));
  const Rng rollout_root = rng.fork(1);
  Rng eval_rng = rng.fork(3);

  HlcTrainResult result{params, {}, false, 0};
  double best_success = -1.0;
  const int per_worker = cfg.gae.rollouts_per_update / cfg.gae.workers;
  const auto t0 = std::chrono::steady_clock::now();

  for (int update = 0; update < cfg.max_updates; ++update) {
    std::vector<std::vector<HlcTrajectory>> slots(cfg.gae.workers);
    auto collect = [&](int w) {
      Rng worker_rng = rollout_root.fork(
          static_cast<std::uint64_t>(update) * cfg.gae.workers + w);
      slots[w].reserve(per_worker);
      for (int e = 0; e < per_worker; ++e) {
        slots[w].push_back(
            run_hlc_episode(params, lse_policies, env_cfg, geometry, worker_rng));
      }
    };
    if (cfg.gae.workers == 1) {
      collect(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(cfg.gae.workers);
      for (int w = 0; w < cfg.gae.workers; ++w) threads.emplace_back(collect, w);
      for (auto& t : threads) t.join();
    }

    std::vector<HlcTrajectory> batch;
    batch.reserve(cfg.gae.rollouts_per_update);
    for (auto& slot : slots) {
      for (auto& traj : slot) {
        result.env_steps += traj.env_steps;
        batch.push_back(std::move(traj));
      }
    }
    hlc_update(params, adam, cfg.adam, batch, cfg.gae);

    if ((update + 1) % cfg.eval_every == 0) {
      const HlcEvalResult er = evaluate_hlc(params, lse_policies, env_cfg, geometry,
                                            cfg.eval_episodes, eval_rng);
      HlcEvalPoint point;
      point.env_steps = result.env_steps;
      point.updates = update + 1;
      point.success_rate = er.success_rate;
      point.sequence_accuracy = er.sequence_accuracy;
      point.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.curve.push_back(point);
      if (callbacks.on_eval) callbacks.on_eval(point);
      if (er.success_rate >= best_success) {
        best_success = er.success_rate;
        result.best_params = params;
        if (callbacks.on_improved) callbacks.on_improved(params, point);
      }
      if (er.success_rate >= cfg.stop_success &&
          er.sequence_accuracy >= cfg.stop_sequence_accuracy) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

void save_hlc_checkpoint(const std::string& path, const RecurrentPolicyParameters& params,
                         const AdamState& adam, std::uint64_t seed, long env_steps) {
  const RecurrentPolicySpec& spec = params.spec();
  CheckpointWriter w;
  w.put_str("role", "hlc");
  w.put_int("seed", static_cast<std::int64_t>(seed));
  w.put_int("env_steps", env_steps);
  Vec dims(3);
  dims << spec.input_dim, spec.hidden_dim, spec.num_actions;
  w.put_vec("spec", dims);
  w.put_vec("params", params.flat());
  w.put_vec("adam_m", adam.m);
  w.put_vec("adam_v", adam.v);
  w.put_int("adam_t", adam.t);
  w.save(path);
}

HlcCheckpoint load_hlc_checkpoint(const std::string& path) {
  CheckpointReader r(path);
  if (r.str("role") != "hlc") {
    throw ConfigError("not a choreographer checkpoint: " + path);
  }
  const Vec dims = r.vec("spec");
  if (dims.size() != 3) throw ConfigError("bad spec entry in " + path);
  RecurrentPolicySpec spec{static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                           static_cast<int>(dims[2])};
  HlcCheckpoint ck{RecurrentPolicyParameters(spec), AdamState(spec.param_count()),
                   static_cast<std::uint64_t>(r.integer("seed")),
                   static_cast<long>(r.integer("env_steps"))};
  const Vec flat = r.vec("params");
  if (flat.size() != ck.params.flat().size()) {
    throw ConfigError("checkpoint entry 'params' has wrong size");
  }
  ck.params.flat() = flat;
  const Vec m = r.vec("adam_m"), v = r.vec("adam_v");
  if (m.size() != ck.adam.m.size() || v.size() != ck.adam.v.size()) {
    throw ConfigError("checkpoint Adam state has wrong size");
  }
  ck.adam.m = m;
  ck.adam.v = v;
  ck.adam.t = r.integer("adam_t");
  return ck;
}

}  // namespace choreo
