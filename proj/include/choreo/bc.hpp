#pragma once

#include <string>
#include <vector>

#include "choreo/ddpg.hpp"
#include "choreo/nn.hpp"
#include "choreo/subtask.hpp"

namespace choreo {

// Demonstration pairs for one subtask. Every column of `inputs` is an
// observation with the subtask goal appended; the matching column of
// `actions` is what the oracle did there.
struct DemoDataset {
  Subtask subtask = Subtask::kApproach;
  Mat inputs;   // (kObsDim + 3) x pairs
  Mat actions;  // 4 x pairs
  long pairs() const { return inputs.cols(); }
};

// Records `st`'s window over n_episodes canonical episodes with every subtask
// under oracle control: exactly subtask_budget(st) pairs per episode, in
// episode order.
DemoDataset collect_demos(const EnvConfig& env_cfg, ObjectGeometry geometry,
                          Subtask st, int n_episodes, Rng& rng);

// One row per pair: observation entries, subgoal entries, action entries.
// Values survive the round trip exactly.
void save_demos(const std::string& path, const DemoDataset& demos);
DemoDataset load_demos(const std::string& path, Subtask st);

// Mean squared error between the actor's outputs and the demonstrated
// actions, averaged over pairs and action entries.
double bc_loss(const MlpParameters& actor, const Mat& inputs, const Mat& actions);

// One Adam step on the minibatch regression loss; returns the pre-step loss.
double bc_update(MlpParameters& actor, AdamState& adam, const AdamConfig& adam_cfg,
                 const Mat& inputs, const Mat& actions);

struct BcTrainConfig {
  std::vector<int> hidden = {256, 256, 256};  // same actor shape as the RL experts
  AdamConfig adam;
  int episodes_per_round = 100;
  int minibatch = 256;
  int epochs_per_round = 10;
  long eval_every = 15000;  // demonstration steps between evaluations
  int eval_episodes = 100;
  double stop_success = 1.0;
};

struct BcTrainResult {
  MlpParameters best_actor;  // snapshot at the best evaluation, last wins
  Vec in_center, in_scale;   // input map the actor was trained under
  double in_clip = 5.0;
  std::vector<EvalPoint> curve;
  bool converged = false;
  long env_steps = 0;  // demonstration steps released to the learner

  SubtaskPolicy policy() const;
  long steps_to_success(double threshold) const;
};

struct BcTrainCallbacks {
  std::function<void(const EvalPoint&)> on_eval;
};

// Supervised baseline: releases the dataset to the learner in rounds of
// episodes_per_round episodes (released demonstration steps are the curve's
// env-step axis, matching the RL trainers' accounting), runs
// epochs_per_round shuffled minibatch epochs over everything released so
// far, and evaluates with the same composite protocol as the RL experts.
// Inputs are scaled by the same environment-derived map the RL experts use.
// Stops early once an evaluation reaches stop_success. Aborts on a
// non-finite loss.
BcTrainResult train_bc_lse(const EnvConfig& env_cfg, ObjectGeometry geometry,
                           const DemoDataset& demos, const BcTrainConfig& cfg,
                           Rng& rng, const BcTrainCallbacks& callbacks = {});

void save_bc_checkpoint(const std::string& path, const BcTrainResult& result,
                        Subtask st, std::uint64_t seed);
SubtaskPolicy load_bc_policy(const std::string& path);

}  // namespace choreo
