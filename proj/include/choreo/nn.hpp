#pragma once

#include <functional>
#include <vector>

#include "choreo/common.hpp"
#include "choreo/rng.hpp"

namespace choreo {

enum class OutputActivation { kNone, kTanh, kSoftmax };

// Fully connected network shape: ReLU hidden layers, configurable output
// activation. Batches are stored column-wise (input_dim x batch).
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  OutputActivation output_activation = OutputActivation::kNone;

  int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
  // (fan_in, fan_out) of each linear layer, first to last.
  std::vector<std::pair<int, int>> layer_dims() const;
  int param_count() const;
  bool operator==(const MlpSpec&) const = default;
};

// Parameters live in one flat vector so optimizers, Polyak averaging and
// checkpoints can treat them as a single array. W then b per layer, W stored
// column-major.
class MlpParameters {
 public:
  explicit MlpParameters(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  Vec& flat() { return theta_; }
  const Vec& flat() const { return theta_; }

  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<Vec> bias(int layer);
  Eigen::Map<const Vec> bias(int layer) const;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(Rng& rng);

 private:
  MlpSpec spec_;
  Vec theta_;
  std::vector<int> w_offsets_;
  std::vector<int> b_offsets_;
};

// Intermediate values of one forward pass, needed for the matching backward.
struct MlpCache {
  std::vector<Mat> inputs;  // input to each linear layer
  std::vector<Mat> pre;     // pre-activation of each layer
  Mat output;               // post output-activation
  bool valid = false;
};

struct MlpGradients {
  Vec dtheta;  // same layout as MlpParameters::flat()
  Mat dinput;  // gradient w.r.t. the network input, input_dim x batch
};

Mat mlp_forward(const MlpParameters& params, const Mat& input, MlpCache* cache = nullptr);

// d_output is the loss gradient w.r.t. the post-activation output. Scaling
// (e.g. 1/batch) is the caller's business. With want_param_grads=false only
// dinput is produced, which makes the critic-through-actor pass cheaper.
// d_pre_extra, if given, is an additional gradient on the final layer's
// pre-activation (for losses that penalize preactivations directly).
MlpGradients mlp_backward(const MlpParameters& params, const MlpCache& cache,
                          const Mat& d_output, bool want_param_grads = true,
                          const Mat* d_pre_extra = nullptr);

// Single GRU cell with a softmax action head and a scalar value head on top of
// the hidden state. Used by the high-level choreographer.
struct RecurrentPolicySpec {
  int input_dim = 0;
  int hidden_dim = 0;
  int num_actions = 0;
  int param_count() const;
  bool operator==(const RecurrentPolicySpec&) const = default;
};

class RecurrentPolicyParameters {
 public:
  explicit RecurrentPolicyParameters(RecurrentPolicySpec spec);

  const RecurrentPolicySpec& spec() const { return spec_; }
  Vec& flat() { return theta_; }
  const Vec& flat() const { return theta_; }

  // Gate order: update (z), reset (r), candidate (h). W* act on the input,
  // U* on the previous hidden state.
  Eigen::Map<Mat> w(int gate);
  Eigen::Map<const Mat> w(int gate) const;
  Eigen::Map<Mat> u(int gate);
  Eigen::Map<const Mat> u(int gate) const;
  Eigen::Map<Vec> b(int gate);
  Eigen::Map<const Vec> b(int gate) const;

  Eigen::Map<Mat> actor_w();
  Eigen::Map<const Mat> actor_w() const;
  Eigen::Map<Vec> actor_b();
  Eigen::Map<const Vec> actor_b() const;
  Eigen::Map<Mat> critic_w();
  Eigen::Map<const Mat> critic_w() const;
  Eigen::Map<Vec> critic_b();
  Eigen::Map<const Vec> critic_b() const;

  // GRU weights Uniform(+-1/sqrt(fan_in)); both heads scaled by 0.01 so early
  // policies are near-uniform and early values near zero.
  void init(Rng& rng);

 private:
  RecurrentPolicySpec spec_;
  Vec theta_;
  int off_w_[3], off_u_[3], off_b_[3];
  int off_aw_, off_ab_, off_cw_, off_cb_;
};

struct RecurrentStepCache {
  Vec x, h_prev;
  Vec z, r, hbar, h;
  Vec logits, pi;
  double value = 0.0;
};

// h' = (1-z) * h + z * hbar, hbar = tanh(Wh x + Uh (r*h) + bh).
RecurrentStepCache recurrent_step(const RecurrentPolicyParameters& params, const Vec& x,
                                  const Vec& h_prev);

std::vector<RecurrentStepCache> recurrent_forward(const RecurrentPolicyParameters& params,
                                                  const std::vector<Vec>& xs, const Vec& h0);

// Backprop through time. d_logits[t] / d_value[t] are the loss gradients at
// step t (w.r.t. pre-softmax logits and the scalar value). Returns dtheta in
// flat layout.
Vec recurrent_backward(const RecurrentPolicyParameters& params,
                       const std::vector<RecurrentStepCache>& caches,
                       const std::vector<Vec>& d_logits, const std::vector<double>& d_value);

// Adam with bias correction.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m, v;
  long t = 0;
  explicit AdamState(int dim) : m(Vec::Zero(dim)), v(Vec::Zero(dim)) {}
  AdamState() = default;
};

void adam_update(Vec& theta, const Vec& grad, AdamState& state, const AdamConfig& cfg);

// target <- retain * target + (1 - retain) * online.
void polyak_update(Vec& target, const Vec& online, double retain);

// Central finite differences of a scalar function at theta. Used to validate
// every analytic gradient in the test suite.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& theta,
                               double eps = 1e-5);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(const Vec& a, const Vec& b, double floor = 1e-6);

}  // namespace choreo
