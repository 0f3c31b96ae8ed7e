#pragma once

#include <utility>

#include "choreo/nn.hpp"
#include "choreo/replay.hpp"
#include "choreo/subtask.hpp"

namespace choreo {

struct DdpgConfig {
  std::vector<int> hidden = {256, 256, 256};
  double gamma = 0.98;
  double polyak_retain = 0.95;
  double noise_sigma = 0.2;         // Gaussian exploration noise on actions
  double random_action_prob = 0.3;  // chance of a uniform random action
  double action_penalty = 1.0;      // weight on mean squared preactivation
  AdamConfig adam;                  // shared settings for actor and critic

  // Entry-wise affine normalization (x - center) / scale applied to the
  // observation and goal parts of every network input, then clipped to
  // [-norm_clip, norm_clip]. Empty means identity. Without this, millimeter
  // scale inputs like the aperture are invisible next to meter scale
  // positions and the critic cannot resolve them.
  Vec obs_center, obs_scale;
  Vec goal_center, goal_scale;
  double norm_clip = 5.0;
};

// Fills empty normalization fields from the environment bounds so positions,
// aperture, contact deltas, velocities and flags land on comparable scales.
void fill_input_normalization(DdpgConfig& cfg, const EnvConfig& env_cfg);

// Goal-conditioned actor-critic. The actor maps [obs, goal] to a tanh-bounded
// action; the critic scores [obs, goal, action]. Target copies track the
// online nets by Polyak averaging once per update cadence.
class DdpgAgent {
 public:
  DdpgAgent(int obs_dim, const DdpgConfig& cfg, Rng& init_rng);

  int obs_dim() const { return obs_dim_; }
  const DdpgConfig& config() const { return cfg_; }

  MlpParameters& actor() { return actor_; }
  const MlpParameters& actor() const { return actor_; }
  MlpParameters& critic() { return critic_; }
  const MlpParameters& critic() const { return critic_; }
  MlpParameters& actor_target() { return actor_target_; }
  const MlpParameters& actor_target() const { return actor_target_; }
  MlpParameters& critic_target() { return critic_target_; }
  const MlpParameters& critic_target() const { return critic_target_; }
  AdamState& actor_adam() { return actor_adam_; }
  const AdamState& actor_adam() const { return actor_adam_; }
  AdamState& critic_adam() { return critic_adam_; }
  const AdamState& critic_adam() const { return critic_adam_; }

  // Deterministic mode is the raw actor output. Explore mode first decides
  // (probability random_action_prob) whether to act uniformly at random;
  // otherwise it perturbs each action component with Gaussian noise of
  // noise_sigma and clamps back to [-1, 1].
  Action select_action(const Vec& obs, const Vec3& goal, bool explore, Rng& rng) const;

  // y = clamp(r + gamma * Q_target(s', pi_target(s'), g), -1/(1-gamma), 0).
  // The lower bound is the worst feasible return of the nonpositive reward.
  Vec critic_targets(const HerBatch& batch) const;

  // Mean squared error to the targets, with its gradient.
  std::pair<double, Vec> critic_loss_grad(const HerBatch& batch, const Vec& targets) const;

  // -mean Q(s, pi(s), g) + action_penalty * mean(preactivation^2), with its
  // gradient through the frozen critic.
  std::pair<double, Vec> actor_loss_grad(const HerBatch& batch) const;

  // One critic step then one actor step. Target nets are NOT touched here;
  // call polyak_targets() once per cadence.
  std::pair<double, double> update(const HerBatch& batch);

  void polyak_targets();

  // Deterministic policy view for evaluation and composition.
  SubtaskPolicy policy() const;

 private:
  Vec normalized_input(const Vec& obs, const Vec3& goal) const;
  Mat normalized_inputs(const Mat& obs_goal) const;

  int obs_dim_;
  DdpgConfig cfg_;
  Vec in_center_, in_scale_;  // obs_dim + 3, identity when not configured
  MlpParameters actor_, critic_, actor_target_, critic_target_;
  AdamState actor_adam_, critic_adam_;
};

struct LseTrainConfig {
  int update_every = 300;        // counted env steps between update cycles
  int batches_per_cadence = 40;
  int batch_size = 256;
  int k_future = 4;
  int epoch_steps = 15000;       // counted env steps between evaluations
  int eval_episodes = 100;
  double stop_success = 1.0;     // stop once an evaluation reaches this
  long max_env_steps = 150000;
  int replay_capacity = 10000;
  DdpgConfig ddpg;
};

struct EvalPoint {
  long env_steps = 0;
  double success_rate = 0.0;
  double wall_seconds = 0.0;
};

struct TrainCallbacks {
  // Called after every evaluation with the point just appended to the curve.
  std::function<void(const EvalPoint&)> on_eval;
  // Called when an evaluation matched or beat the best so far (last wins).
  std::function<void(const DdpgAgent&, const EvalPoint&)> on_improved;
};

struct LseTrainResult {
  DdpgAgent best_agent;       // snapshot at the best evaluation, last wins
  std::vector<EvalPoint> curve;
  bool converged = false;
  long env_steps = 0;         // counted env steps actually consumed

  // First evaluation reaching `threshold`, or -1 if none did.
  long steps_to_success(double threshold) const;
};

// DDPG+HER training of one subtask expert. Episodes reach the subtask's
// window under oracle actions, the window itself runs the explore-mode
// policy, and only window transitions are stored and counted as env steps.
// Every `update_every` counted steps: batches_per_cadence updates then one
// Polyak step. Every `epoch_steps`: an evaluation via evaluate_lse; training
// stops at stop_success or the step budget.
LseTrainResult train_lse(const EnvConfig& env_cfg, ObjectGeometry geometry, Subtask st,
                         const LseTrainConfig& cfg, Rng& rng,
                         const TrainCallbacks& callbacks = {});

// The same loop continued from an existing agent instead of a fresh one.
// Optimizer state and target nets come with the agent; the replay buffer and
// rng streams start fresh. Used to adapt a trained expert to a new geometry.
LseTrainResult fine_tune_lse(const DdpgAgent& start, const EnvConfig& env_cfg,
                             ObjectGeometry geometry, Subtask st, const LseTrainConfig& cfg,
                             Rng& rng, const TrainCallbacks& callbacks = {});

// The same machinery on the flat 50-step task: the goal is the episode goal,
// the achieved goal is the object position throughout, no subtask structure,
// and every env step counts.
LseTrainResult train_end_to_end(const EnvConfig& env_cfg, ObjectGeometry geometry,
                                const LseTrainConfig& cfg, Rng& rng,
                                const TrainCallbacks& callbacks = {});

// Success rate of a flat policy on full episodes, deterministic actions.
double evaluate_end_to_end(const DdpgAgent& agent, const EnvConfig& env_cfg,
                           ObjectGeometry geometry, int episodes, Rng& rng);

}  // namespace choreo
