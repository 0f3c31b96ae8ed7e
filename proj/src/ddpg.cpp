#include "choreo/ddpg.hpp"

#include <chrono>
#include <memory>

namespace choreo {

namespace {

MlpSpec actor_spec(int obs_dim, const DdpgConfig& cfg) {
  return MlpSpec{obs_dim + 3, cfg.hidden, 4, OutputActivation::kTanh};
}

MlpSpec critic_spec(int obs_dim, const DdpgConfig& cfg) {
  return MlpSpec{obs_dim + 3 + 4, cfg.hidden, 1, OutputActivation::kNone};
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void fill_input_normalization(DdpgConfig& cfg, const EnvConfig& env_cfg) {
  if (cfg.obs_center.size() != 0 || cfg.obs_scale.size() != 0 ||
      cfg.goal_center.size() != 0 || cfg.goal_scale.size() != 0) {
    return;
  }
  const int n = KinematicEnv::kObsDim;
  const Vec3 center = 0.5 * (env_cfg.workspace_lo + env_cfg.workspace_hi);
  const Vec3 half = 0.5 * (env_cfg.workspace_hi - env_cfg.workspace_lo);
  cfg.obs_center = Vec::Zero(n);
  cfg.obs_scale = Vec::Ones(n);
  // [gripper(3), aperture, object(3), object - gripper(3), gripper_vel(3),
  //  object_vel(3), attached]
  cfg.obs_center.segment<3>(0) = center;
  cfg.obs_scale.segment<3>(0) = half;
  cfg.obs_center[3] = 0.5 * env_cfg.aperture_max;
  cfg.obs_scale[3] = 0.5 * env_cfg.aperture_max;
  cfg.obs_center.segment<3>(4) = center;
  cfg.obs_scale.segment<3>(4) = half;
  cfg.obs_scale.segment<3>(7).setConstant(2.0 * env_cfg.r_grasp);
  cfg.obs_scale.segment<3>(10).setConstant(env_cfg.eta);
  cfg.obs_scale.segment<3>(13).setConstant(env_cfg.eta);
  cfg.obs_center[16] = 0.5;
  cfg.obs_scale[16] = 0.5;
  cfg.goal_center = center;
  cfg.goal_scale = half;
}

DdpgAgent::DdpgAgent(int obs_dim, const DdpgConfig& cfg, Rng& init_rng)
    : obs_dim_(obs_dim),
      cfg_(cfg),
      actor_(actor_spec(obs_dim, cfg)),
      critic_(critic_spec(obs_dim, cfg)),
      actor_target_(actor_spec(obs_dim, cfg)),
      critic_target_(critic_spec(obs_dim, cfg)),
      actor_adam_(actor_.flat().size()),
      critic_adam_(critic_.flat().size()) {
  require(cfg_.gamma >= 0.0 && cfg_.gamma < 1.0, "DdpgConfig: gamma outside [0,1)");
  in_center_ = Vec::Zero(obs_dim + 3);
  in_scale_ = Vec::Ones(obs_dim + 3);
  if (cfg_.obs_center.size() != 0 || cfg_.obs_scale.size() != 0) {
    require(cfg_.obs_center.size() == obs_dim && cfg_.obs_scale.size() == obs_dim &&
                cfg_.goal_center.size() == 3 && cfg_.goal_scale.size() == 3,
            "DdpgConfig: normalization vectors must match obs and goal dims");
    require((cfg_.obs_scale.array() > 0.0).all() && (cfg_.goal_scale.array() > 0.0).all(),
            "DdpgConfig: normalization scales must be positive");
    in_center_.head(obs_dim) = cfg_.obs_center;
    in_center_.tail(3) = cfg_.goal_center;
    in_scale_.head(obs_dim) = cfg_.obs_scale;
    in_scale_.tail(3) = cfg_.goal_scale;
  }
  actor_.init(init_rng);
  critic_.init(init_rng);
  actor_target_.flat() = actor_.flat();
  critic_target_.flat() = critic_.flat();
}

Vec DdpgAgent::normalized_input(const Vec& obs, const Vec3& goal) const {
  Vec input(obs_dim_ + 3);
  input.head(obs_dim_) = obs;
  input.tail(3) = goal;
  input = (input - in_center_).cwiseQuotient(in_scale_);
  return input.cwiseMax(-cfg_.norm_clip).cwiseMin(cfg_.norm_clip);
}

Mat DdpgAgent::normalized_inputs(const Mat& obs_goal) const {
  Mat out = (obs_goal.colwise() - in_center_).array().colwise() / in_scale_.array();
  return out.cwiseMax(-cfg_.norm_clip).cwiseMin(cfg_.norm_clip);
}

Action DdpgAgent::select_action(const Vec& obs, const Vec3& goal, bool explore,
                                Rng& rng) const {
  if (explore && rng.uniform() < cfg_.random_action_prob) {
    Action a;
    for (int i = 0; i < 4; ++i) a[i] = rng.uniform(-1.0, 1.0);
    return a;
  }
  Mat out = mlp_forward(actor_, normalized_input(obs, goal));
  Action a = out.col(0);
  if (explore) {
    for (int i = 0; i < 4; ++i) a[i] = clamp(a[i] + cfg_.noise_sigma * rng.normal(), -1.0, 1.0);
  }
  return a;
}

Vec DdpgAgent::critic_targets(const HerBatch& batch) const {
  const int B = static_cast<int>(batch.reward.size());
  const Mat next_in = normalized_inputs(batch.obs_goal_next);
  Mat next_action = mlp_forward(actor_target_, next_in);
  Mat critic_in(obs_dim_ + 3 + 4, B);
  critic_in.topRows(obs_dim_ + 3) = next_in;
  critic_in.bottomRows(4) = next_action;
  Mat q_next = mlp_forward(critic_target_, critic_in);
  const double lo = -1.0 / (1.0 - cfg_.gamma);
  Vec y(B);
  for (int i = 0; i < B; ++i) {
    y[i] = clamp(batch.reward[i] + cfg_.gamma * q_next(0, i), lo, 0.0);
  }
  return y;
}

std::pair<double, Vec> DdpgAgent::critic_loss_grad(const HerBatch& batch,
                                                   const Vec& targets) const {
  const int B = static_cast<int>(batch.reward.size());
  require(targets.size() == B, "critic_loss_grad: target size mismatch");
  Mat critic_in(obs_dim_ + 3 + 4, B);
  critic_in.topRows(obs_dim_ + 3) = normalized_inputs(batch.obs_goal);
  critic_in.bottomRows(4) = batch.action;
  MlpCache cache;
  Mat q = mlp_forward(critic_, critic_in, &cache);
  Vec err = q.row(0).transpose() - targets;
  const double loss = err.squaredNorm() / B;
  Mat dq = (2.0 / B) * err.transpose();
  MlpGradients g = mlp_backward(critic_, cache, dq);
  return {loss, std::move(g.dtheta)};
}

std::pair<double, Vec> DdpgAgent::actor_loss_grad(const HerBatch& batch) const {
  const int B = static_cast<int>(batch.reward.size());
  const Mat in = normalized_inputs(batch.obs_goal);
  MlpCache actor_cache;
  Mat action = mlp_forward(actor_, in, &actor_cache);
  const Mat& preact = actor_cache.pre.back();

  Mat critic_in(obs_dim_ + 3 + 4, B);
  critic_in.topRows(obs_dim_ + 3) = in;
  critic_in.bottomRows(4) = action;
  MlpCache critic_cache;
  Mat q = mlp_forward(critic_, critic_in, &critic_cache);

  const double penalty = cfg_.action_penalty * preact.array().square().mean();
  const double loss = -q.row(0).mean() + penalty;

  Mat dq = Mat::Constant(1, B, -1.0 / B);
  MlpGradients through_critic = mlp_backward(critic_, critic_cache, dq, false);
  Mat d_action = through_critic.dinput.bottomRows(4);
  Mat d_pre = (2.0 * cfg_.action_penalty / (4.0 * B)) * preact;
  MlpGradients g = mlp_backward(actor_, actor_cache, d_action, true, &d_pre);
  return {loss, std::move(g.dtheta)};
}

std::pair<double, double> DdpgAgent::update(const HerBatch& batch) {
  Vec targets = critic_targets(batch);
  auto [critic_loss, critic_grad] = critic_loss_grad(batch, targets);
  auto [actor_loss, actor_grad] = actor_loss_grad(batch);
  if (!std::isfinite(critic_loss) || !std::isfinite(actor_loss)) {
    throw NumericError("ddpg update: non-finite loss");
  }
  adam_update(critic_.flat(), critic_grad, critic_adam_, cfg_.adam);
  adam_update(actor_.flat(), actor_grad, actor_adam_, cfg_.adam);
  return {critic_loss, actor_loss};
}

void DdpgAgent::polyak_targets() {
  polyak_update(actor_target_.flat(), actor_.flat(), cfg_.polyak_retain);
  polyak_update(critic_target_.flat(), critic_.flat(), cfg_.polyak_retain);
}

SubtaskPolicy DdpgAgent::policy() const {
  // Self-contained copies so the policy outlives the agent.
  auto actor = std::make_shared<MlpParameters>(actor_);
  const int obs_dim = obs_dim_;
  const Vec center = in_center_, scale = in_scale_;
  const double clip = cfg_.norm_clip;
  return [actor, obs_dim, center, scale, clip](const Vec& obs, const Vec3& goal) -> Action {
    Vec input(obs_dim + 3);
    input.head(obs_dim) = obs;
    input.tail(3) = goal;
    input = (input - center).cwiseQuotient(scale).cwiseMax(-clip).cwiseMin(clip);
    return mlp_forward(*actor, input).col(0);
  };
}

long LseTrainResult::steps_to_success(double threshold) const {
  for (const auto& pt : curve) {
    if (pt.success_rate >= threshold) return pt.env_steps;
  }
  return -1;
}

namespace {

struct TrainLoop {
  const LseTrainConfig& cfg;
  DdpgAgent agent;
  ReplayBuffer buffer;
  Rng rollout_rng, sample_rng, eval_rng;
  LseTrainResult result;
  double best_rate = -1.0;
  long steps = 0;
  int since_update = 0;
  long since_eval = 0;
  double started = 0.0;

  TrainLoop(int obs_dim, const LseTrainConfig& cfg_in, Rng& rng,
            const DdpgAgent* init = nullptr)
      : cfg(cfg_in),
        agent(obs_dim, cfg_in.ddpg, rng),
        buffer(cfg_in.replay_capacity),
        rollout_rng(rng.fork(1)),
        sample_rng(rng.fork(2)),
        eval_rng(rng.fork(3)),
        result{agent, {}, false, 0} {
    require(cfg.epoch_steps % cfg.update_every == 0,
            "LseTrainConfig: epoch must be a multiple of the update cadence");
    if (init) {
      require(init->obs_dim() == obs_dim, "TrainLoop: initial agent dimension mismatch");
      agent = *init;
      result.best_agent = agent;
    }
    started = now_seconds();
  }

  void count_step() {
    steps += 1;
    since_update += 1;
    since_eval += 1;
  }

  void maybe_update() {
    if (since_update < cfg.update_every) return;
    since_update = 0;
    if (buffer.num_episodes() == 0) return;
    for (int b = 0; b < cfg.batches_per_cadence; ++b) {
      HerBatch batch = buffer.sample_with_her(cfg.batch_size, cfg.k_future, sample_rng);
      agent.update(batch);
    }
    agent.polyak_targets();
  }

  // Returns true when training should stop.
  bool maybe_eval(const std::function<double(const DdpgAgent&, Rng&)>& eval_fn,
                  const TrainCallbacks& callbacks) {
    if (since_eval < cfg.epoch_steps) return false;
    since_eval = 0;
    const double rate = eval_fn(agent, eval_rng);
    EvalPoint pt{steps, rate, now_seconds() - started};
    result.curve.push_back(pt);
    if (callbacks.on_eval) callbacks.on_eval(pt);
    if (rate >= best_rate) {
      best_rate = rate;
      result.best_agent = agent;
      if (callbacks.on_improved) callbacks.on_improved(agent, pt);
    }
    if (rate >= cfg.stop_success) {
      result.converged = true;
      return true;
    }
    return false;
  }

  void finish() { result.env_steps = steps; }
};

}  // namespace

namespace {

LseTrainResult run_lse(const EnvConfig& env_cfg, ObjectGeometry geometry, Subtask st,
                       const LseTrainConfig& cfg, Rng& rng, const TrainCallbacks& callbacks,
                       const DdpgAgent* init) {
  LseTrainConfig run_cfg = cfg;
  fill_input_normalization(run_cfg.ddpg, env_cfg);
  TrainLoop loop(KinematicEnv::kObsDim, run_cfg, rng, init);
  KinematicEnv env(env_cfg, geometry);
  auto oracles = make_oracle_policies(env_cfg, geometry);
  const int idx = static_cast<int>(st);
  const int budget = subtask_budget(st);

  auto eval_fn = [&](const DdpgAgent& agent, Rng& eval_rng) {
    return evaluate_lse(agent.policy(), st, env_cfg, geometry, cfg.eval_episodes, eval_rng);
  };

  bool stop = false;
  while (!stop && loop.steps < cfg.max_env_steps) {
    env.reset(loop.rollout_rng);
    run_window_prefix(env, st, oracles);
    std::vector<Transition> episode;
    episode.reserve(budget);
    for (int k = 0; k < budget; ++k) {
      Transition tr;
      tr.obs = env.observation();
      tr.achieved = achieved_goal(st, env.state());
      tr.goal = subgoal(st, env.state());
      tr.action = loop.agent.select_action(tr.obs, tr.goal, true, loop.rollout_rng);
      env.step(tr.action);
      tr.obs_next = env.observation();
      tr.achieved_next = achieved_goal(st, env.state());
      tr.done = (k == budget - 1);
      episode.push_back(std::move(tr));

      loop.count_step();
      loop.maybe_update();
      if (loop.maybe_eval(eval_fn, callbacks) || loop.steps >= cfg.max_env_steps) {
        stop = true;
      }
    }
    loop.buffer.store_episode(std::move(episode));
  }
  loop.finish();
  return loop.result;
}

}  // namespace

LseTrainResult train_lse(const EnvConfig& env_cfg, ObjectGeometry geometry, Subtask st,
                         const LseTrainConfig& cfg, Rng& rng,
                         const TrainCallbacks& callbacks) {
  return run_lse(env_cfg, geometry, st, cfg, rng, callbacks, nullptr);
}

LseTrainResult fine_tune_lse(const DdpgAgent& start, const EnvConfig& env_cfg,
                             ObjectGeometry geometry, Subtask st, const LseTrainConfig& cfg,
                             Rng& rng, const TrainCallbacks& callbacks) {
  return run_lse(env_cfg, geometry, st, cfg, rng, callbacks, &start);
}

LseTrainResult train_end_to_end(const EnvConfig& env_cfg, ObjectGeometry geometry,
                                const LseTrainConfig& cfg, Rng& rng,
                                const TrainCallbacks& callbacks) {
  LseTrainConfig run_cfg = cfg;
  fill_input_normalization(run_cfg.ddpg, env_cfg);
  TrainLoop loop(KinematicEnv::kObsDim, run_cfg, rng);
  KinematicEnv env(env_cfg, geometry);

  auto eval_fn = [&](const DdpgAgent& agent, Rng& eval_rng) {
    return evaluate_end_to_end(agent, env_cfg, geometry, cfg.eval_episodes, eval_rng);
  };

  bool stop = false;
  while (!stop && loop.steps < cfg.max_env_steps) {
    env.reset(loop.rollout_rng);
    std::vector<Transition> episode;
    episode.reserve(kEpisodeLength);
    for (int k = 0; k < kEpisodeLength; ++k) {
      Transition tr;
      tr.obs = env.observation();
      tr.achieved = env.state().object;
      tr.goal = env.state().goal;
      tr.action = loop.agent.select_action(tr.obs, tr.goal, true, loop.rollout_rng);
      env.step(tr.action);
      tr.obs_next = env.observation();
      tr.achieved_next = env.state().object;
      tr.done = (k == kEpisodeLength - 1);
      episode.push_back(std::move(tr));

      loop.count_step();
      loop.maybe_update();
      if (loop.maybe_eval(eval_fn, callbacks) || loop.steps >= cfg.max_env_steps) {
        stop = true;
      }
    }
    loop.buffer.store_episode(std::move(episode));
  }
  loop.finish();
  return loop.result;
}

double evaluate_end_to_end(const DdpgAgent& agent, const EnvConfig& env_cfg,
                           ObjectGeometry geometry, int episodes, Rng& rng) {
  require(episodes > 0, "evaluate_end_to_end: episodes must be positive");
  KinematicEnv env(env_cfg, geometry);
  SubtaskPolicy policy = agent.policy();
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(rng);
    for (int k = 0; k < kEpisodeLength; ++k) {
      env.step(policy(env.observation(), env.state().goal));
      if (is_success(env.state().object, env.state().goal, env_cfg.eps_success)) break;
    }
    successes +=
        is_success(env.state().object, env.state().goal, env_cfg.eps_success) ? 1 : 0;
  }
  return static_cast<double>(successes) / episodes;
}

}  // namespace choreo
