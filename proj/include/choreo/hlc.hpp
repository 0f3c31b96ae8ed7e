#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "choreo/nn.hpp"
#include "choreo/subtask.hpp"

namespace choreo {

// The choreographer picks subtasks one at a time. Each pick runs the chosen
// expert for its step budget; the episode ends on task success, after
// kMaxSequenceLength picks, or at the env-step cap (twice the canonical
// episode length).
inline constexpr int kHlcObsDim = KinematicEnv::kObsDim + 3 + 1;
inline constexpr int kHlcHiddenDim = 64;
inline constexpr int kHlcEnvStepCap = 2 * kEpisodeLength;

struct GaeConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int workers = 4;
  int rollouts_per_update = 16;
};

// [env observation (17), task goal (3), picks made so far / horizon (1)].
Vec hlc_observation(const KinematicEnv& env, int selections_made);

// Sparse: 1 only when the episode ends with the object placed.
double hlc_reward(bool final_success, bool terminal);

// A_t = sum_l (gamma*lambda)^l * delta_{t+l} with delta_t = r_t +
// gamma*v_{t+1} - v_t. `values` carries one bootstrap entry past the rewards;
// the caller zeroes it on terminal trajectories.
std::vector<double> compute_gae(const std::vector<double>& rewards,
                                const std::vector<double>& values, double gamma,
                                double lambda);

// Shift and scale to zero mean, unit variance across the update batch.
void normalize_advantages(std::vector<double>& advantages);

struct HlcStep {
  Vec obs;                // kHlcObsDim entries
  int action = 0;         // chosen subtask id
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool terminal = false;
};

struct HlcTrajectory {
  std::vector<HlcStep> steps;  // <= kMaxSequenceLength, exactly one terminal
  bool success = false;
  long env_steps = 0;
};

struct HlcEpisodeOptions {
  bool greedy = false;  // argmax instead of sampling
  // Overrides action selection; entries are consumed in order and the last
  // one repeats if the episode outlives the list.
  const std::vector<Subtask>* forced = nullptr;
};

HlcTrajectory run_hlc_episode(const RecurrentPolicyParameters& params,
                              const std::array<SubtaskPolicy, 3>& lse_policies,
                              const EnvConfig& env_cfg, ObjectGeometry geometry, Rng& rng,
                              const HlcEpisodeOptions& opts = {});

struct HlcLosses {
  double actor = 0.0;    // -sum A_t log pi(a_t | s_t)
  double entropy = 0.0;  // sum of step entropies (bonus, not yet weighted)
  double value = 0.0;    // value_coef * sum (return_t - v_t)^2
  double total = 0.0;    // actor - entropy_coef * entropy + value
};

// Loss and flat parameter gradient over a batch of trajectories with the
// given per-step advantages (concatenated in batch order). Advantages enter
// as data, so the gradient treats them as constants.
HlcLosses hlc_loss_grad(const RecurrentPolicyParameters& params,
                        const std::vector<HlcTrajectory>& batch,
                        const std::vector<double>& advantages, const GaeConfig& cfg,
                        Vec& grad_out);

// GAE per trajectory, batch-normalized advantages, one Adam step. Throws
// NumericError if the loss or gradient stops being finite.
HlcLosses hlc_update(RecurrentPolicyParameters& params, AdamState& adam,
                     const AdamConfig& adam_cfg, const std::vector<HlcTrajectory>& batch,
                     const GaeConfig& cfg);

struct HlcEvalResult {
  double success_rate = 0.0;
  // Fraction of episodes whose pick sequence is exactly approach, manipulate,
  // retract.
  double sequence_accuracy = 0.0;
};

HlcEvalResult evaluate_hlc(const RecurrentPolicyParameters& params,
                           const std::array<SubtaskPolicy, 3>& lse_policies,
                           const EnvConfig& env_cfg, ObjectGeometry geometry, int episodes,
                           Rng& rng);

struct HlcEvalPoint {
  long env_steps = 0;  // cumulative env steps consumed by training rollouts
  int updates = 0;
  double success_rate = 0.0;
  double sequence_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct HlcTrainConfig {
  GaeConfig gae;
  AdamConfig adam;
  int eval_every = 50;  // updates between evaluations
  int eval_episodes = 100;
  double stop_success = 1.0;
  double stop_sequence_accuracy = 0.95;  // both must hold to stop early
  int max_updates = 2000;
  RecurrentPolicySpec spec{kHlcObsDim, kHlcHiddenDim, kNumSubtasks};
};

struct HlcTrainCallbacks {
  std::function<void(const HlcEvalPoint&)> on_eval;
  std::function<void(const RecurrentPolicyParameters&, const HlcEvalPoint&)> on_improved;
};

struct HlcTrainResult {
  RecurrentPolicyParameters best_params;  // best evaluation success, last wins
  std::vector<HlcEvalPoint> curve;
  bool converged = false;
  long env_steps = 0;
};

// Synchronous advantage actor-critic over frozen subtask experts. Each round,
// `workers` threads with private environments and rng streams collect
// rollouts_per_update episodes between them under a read-only parameter
// snapshot; one updater then applies the aggregated gradient, so results do
// not depend on thread interleaving.
HlcTrainResult train_hlc(const EnvConfig& env_cfg, ObjectGeometry geometry,
                         const std::array<SubtaskPolicy, 3>& lse_policies,
                         const HlcTrainConfig& cfg, Rng& rng,
                         const HlcTrainCallbacks& callbacks = {});

void save_hlc_checkpoint(const std::string& path, const RecurrentPolicyParameters& params,
                         const AdamState& adam, std::uint64_t seed, long env_steps);

struct HlcCheckpoint {
  RecurrentPolicyParameters params;
  AdamState adam;
  std::uint64_t seed = 0;
  long env_steps = 0;
};

HlcCheckpoint load_hlc_checkpoint(const std::string& path);

}  // namespace choreo
