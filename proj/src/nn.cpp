#include "choreo/nn.hpp"

#include <cmath>

namespace choreo {

std::vector<std::pair<int, int>> MlpSpec::layer_dims() const {
  require(input_dim > 0 && output_dim > 0, "MlpSpec: dims must be positive");
  std::vector<std::pair<int, int>> dims;
  int in = input_dim;
  for (int h : hidden) {
    require(h > 0, "MlpSpec: hidden dims must be positive");
    dims.emplace_back(in, h);
    in = h;
  }
  dims.emplace_back(in, output_dim);
  return dims;
}

int MlpSpec::param_count() const {
  int n = 0;
  for (auto [in, out] : layer_dims()) n += out * in + out;
  return n;
}

MlpParameters::MlpParameters(MlpSpec spec) : spec_(std::move(spec)) {
  int off = 0;
  for (auto [in, out] : spec_.layer_dims()) {
    w_offsets_.push_back(off);
    off += out * in;
    b_offsets_.push_back(off);
    off += out;
  }
  theta_ = Vec::Zero(off);
}

Eigen::Map<Mat> MlpParameters::weight(int layer) {
  auto [in, out] = spec_.layer_dims()[layer];
  return {theta_.data() + w_offsets_[layer], out, in};
}

Eigen::Map<const Mat> MlpParameters::weight(int layer) const {
  auto [in, out] = spec_.layer_dims()[layer];
  return {theta_.data() + w_offsets_[layer], out, in};
}

Eigen::Map<Vec> MlpParameters::bias(int layer) {
  auto [in, out] = spec_.layer_dims()[layer];
  (void)in;
  return {theta_.data() + b_offsets_[layer], out};
}

Eigen::Map<const Vec> MlpParameters::bias(int layer) const {
  auto [in, out] = spec_.layer_dims()[layer];
  (void)in;
  return {theta_.data() + b_offsets_[layer], out};
}

void MlpParameters::init(Rng& rng) {
  const auto dims = spec_.layer_dims();
  for (int l = 0; l < spec_.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l].first));
    auto w = weight(l);
    for (int j = 0; j < w.cols(); ++j)
      for (int i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    auto b = bias(l);
    for (int i = 0; i < b.size(); ++i) b[i] = rng.uniform(-bound, bound);
  }
}

static void apply_output_activation(OutputActivation act, Mat& y) {
  switch (act) {
    case OutputActivation::kNone:
      break;
    case OutputActivation::kTanh:
      y = y.array().tanh();
      break;
    case OutputActivation::kSoftmax:
      for (int c = 0; c < y.cols(); ++c) {
        Vec col = y.col(c);
        const double m = col.maxCoeff();
        col = (col.array() - m).exp();
        y.col(c) = col / col.sum();
      }
      break;
  }
}

Mat mlp_forward(const MlpParameters& params, const Mat& input, MlpCache* cache) {
  const auto& spec = params.spec();
  require(input.rows() == spec.input_dim, "mlp_forward: input dim mismatch");
  require(input.allFinite(), "mlp_forward: non-finite input");
  const int n = spec.num_layers();
  Mat a = input;
  if (cache) {
    cache->inputs.assign(n, Mat());
    cache->pre.assign(n, Mat());
  }
  for (int l = 0; l < n; ++l) {
    if (cache) cache->inputs[l] = a;
    Mat z = (params.weight(l) * a).colwise() + params.bias(l);
    if (cache) cache->pre[l] = z;
    if (l + 1 < n) {
      a = z.array().max(0.0);
    } else {
      apply_output_activation(spec.output_activation, z);
      a = std::move(z);
    }
  }
  if (cache) {
    cache->output = a;
    cache->valid = true;
  }
  return a;
}

MlpGradients mlp_backward(const MlpParameters& params, const MlpCache& cache,
                          const Mat& d_output, bool want_param_grads,
                          const Mat* d_pre_extra) {
  require(cache.valid, "mlp_backward: cache not populated by a forward pass");
  const auto& spec = params.spec();
  const int n = spec.num_layers();
  require(d_output.rows() == spec.output_dim && d_output.cols() == cache.output.cols(),
          "mlp_backward: d_output shape mismatch");

  MlpGradients g;
  if (want_param_grads) g.dtheta = Vec::Zero(params.flat().size());

  Mat dz;
  switch (spec.output_activation) {
    case OutputActivation::kNone:
      dz = d_output;
      break;
    case OutputActivation::kTanh:
      dz = d_output.array() * (1.0 - cache.output.array().square());
      break;
    case OutputActivation::kSoftmax: {
      dz.resize(d_output.rows(), d_output.cols());
      for (int c = 0; c < d_output.cols(); ++c) {
        const Vec p = cache.output.col(c);
        const double dot = p.dot(d_output.col(c));
        dz.col(c) = p.array() * (d_output.col(c).array() - dot);
      }
      break;
    }
  }
  if (d_pre_extra) {
    require(d_pre_extra->rows() == dz.rows() && d_pre_extra->cols() == dz.cols(),
            "mlp_backward: d_pre_extra shape mismatch");
    dz += *d_pre_extra;
  }

  MlpParameters grads(spec);  // reuse the flat layout for per-layer views
  for (int l = n - 1; l >= 0; --l) {
    if (want_param_grads) {
      grads.weight(l).noalias() = dz * cache.inputs[l].transpose();
      grads.bias(l) = dz.rowwise().sum();
    }
    Mat da = params.weight(l).transpose() * dz;
    if (l > 0) {
      dz = da.array() * (cache.pre[l - 1].array() > 0.0).cast<double>();
    } else {
      g.dinput = std::move(da);
    }
  }
  if (want_param_grads) g.dtheta = grads.flat();
  return g;
}

int RecurrentPolicySpec::param_count() const {
  const int h = hidden_dim, x = input_dim, a = num_actions;
  return 3 * (h * x + h * h + h) + (a * h + a) + (h + 1);
}

RecurrentPolicyParameters::RecurrentPolicyParameters(RecurrentPolicySpec spec) : spec_(spec) {
  require(spec_.input_dim > 0 && spec_.hidden_dim > 0 && spec_.num_actions > 0,
          "RecurrentPolicySpec: dims must be positive");
  const int h = spec_.hidden_dim, x = spec_.input_dim, a = spec_.num_actions;
  int off = 0;
  for (int gate = 0; gate < 3; ++gate) {
    off_w_[gate] = off;
    off += h * x;
    off_u_[gate] = off;
    off += h * h;
    off_b_[gate] = off;
    off += h;
  }
  off_aw_ = off;
  off += a * h;
  off_ab_ = off;
  off += a;
  off_cw_ = off;
  off += h;
  off_cb_ = off;
  off += 1;
  theta_ = Vec::Zero(off);
}

Eigen::Map<Mat> RecurrentPolicyParameters::w(int gate) {
  return {theta_.data() + off_w_[gate], spec_.hidden_dim, spec_.input_dim};
}
Eigen::Map<const Mat> RecurrentPolicyParameters::w(int gate) const {
  return {theta_.data() + off_w_[gate], spec_.hidden_dim, spec_.input_dim};
}
Eigen::Map<Mat> RecurrentPolicyParameters::u(int gate) {
  return {theta_.data() + off_u_[gate], spec_.hidden_dim, spec_.hidden_dim};
}
Eigen::Map<const Mat> RecurrentPolicyParameters::u(int gate) const {
  return {theta_.data() + off_u_[gate], spec_.hidden_dim, spec_.hidden_dim};
}
Eigen::Map<Vec> RecurrentPolicyParameters::b(int gate) {
  return {theta_.data() + off_b_[gate], spec_.hidden_dim};
}
Eigen::Map<const Vec> RecurrentPolicyParameters::b(int gate) const {
  return {theta_.data() + off_b_[gate], spec_.hidden_dim};
}
Eigen::Map<Mat> RecurrentPolicyParameters::actor_w() {
  return {theta_.data() + off_aw_, spec_.num_actions, spec_.hidden_dim};
}
Eigen::Map<const Mat> RecurrentPolicyParameters::actor_w() const {
  return {theta_.data() + off_aw_, spec_.num_actions, spec_.hidden_dim};
}
Eigen::Map<Vec> RecurrentPolicyParameters::actor_b() {
  return {theta_.data() + off_ab_, spec_.num_actions};
}
Eigen::Map<const Vec> RecurrentPolicyParameters::actor_b() const {
  return {theta_.data() + off_ab_, spec_.num_actions};
}
Eigen::Map<Mat> RecurrentPolicyParameters::critic_w() {
  return {theta_.data() + off_cw_, 1, spec_.hidden_dim};
}
Eigen::Map<const Mat> RecurrentPolicyParameters::critic_w() const {
  return {theta_.data() + off_cw_, 1, spec_.hidden_dim};
}
Eigen::Map<Vec> RecurrentPolicyParameters::critic_b() { return {theta_.data() + off_cb_, 1}; }
Eigen::Map<const Vec> RecurrentPolicyParameters::critic_b() const {
  return {theta_.data() + off_cb_, 1};
}

void RecurrentPolicyParameters::init(Rng& rng) {
  const int h = spec_.hidden_dim, x = spec_.input_dim;
  const double bx = 1.0 / std::sqrt(static_cast<double>(x));
  const double bh = 1.0 / std::sqrt(static_cast<double>(h));
  for (int gate = 0; gate < 3; ++gate) {
    auto wm = w(gate);
    for (int j = 0; j < wm.cols(); ++j)
      for (int i = 0; i < wm.rows(); ++i) wm(i, j) = rng.uniform(-bx, bx);
    auto um = u(gate);
    for (int j = 0; j < um.cols(); ++j)
      for (int i = 0; i < um.rows(); ++i) um(i, j) = rng.uniform(-bh, bh);
    auto bv = b(gate);
    for (int i = 0; i < bv.size(); ++i) bv[i] = rng.uniform(-bh, bh);
  }
  const double head_scale = 0.01;
  auto aw = actor_w();
  for (int j = 0; j < aw.cols(); ++j)
    for (int i = 0; i < aw.rows(); ++i) aw(i, j) = head_scale * rng.uniform(-bh, bh);
  auto ab = actor_b();
  for (int i = 0; i < ab.size(); ++i) ab[i] = head_scale * rng.uniform(-bh, bh);
  auto cw = critic_w();
  for (int j = 0; j < cw.cols(); ++j) cw(0, j) = head_scale * rng.uniform(-bh, bh);
  critic_b()[0] = head_scale * rng.uniform(-bh, bh);
}

static Vec sigmoid(const Vec& v) { return (1.0 / (1.0 + (-v.array()).exp())).matrix(); }

RecurrentStepCache recurrent_step(const RecurrentPolicyParameters& params, const Vec& x,
                                  const Vec& h_prev) {
  const auto& spec = params.spec();
  require(x.size() == spec.input_dim, "recurrent_step: input dim mismatch");
  require(h_prev.size() == spec.hidden_dim, "recurrent_step: hidden dim mismatch");
  RecurrentStepCache c;
  c.x = x;
  c.h_prev = h_prev;
  c.z = sigmoid(params.w(0) * x + params.u(0) * h_prev + params.b(0));
  c.r = sigmoid(params.w(1) * x + params.u(1) * h_prev + params.b(1));
  c.hbar = (params.w(2) * x + params.u(2) * (c.r.cwiseProduct(h_prev)) + params.b(2))
               .array()
               .tanh();
  c.h = (1.0 - c.z.array()) * h_prev.array() + c.z.array() * c.hbar.array();
  c.logits = params.actor_w() * c.h + params.actor_b();
  Vec shifted = (c.logits.array() - c.logits.maxCoeff()).exp();
  c.pi = shifted / shifted.sum();
  c.value = (params.critic_w() * c.h)(0) + params.critic_b()[0];
  return c;
}

std::vector<RecurrentStepCache> recurrent_forward(const RecurrentPolicyParameters& params,
                                                  const std::vector<Vec>& xs, const Vec& h0) {
  std::vector<RecurrentStepCache> caches;
  caches.reserve(xs.size());
  Vec h = h0;
  for (const Vec& x : xs) {
    caches.push_back(recurrent_step(params, x, h));
    h = caches.back().h;
  }
  return caches;
}

Vec recurrent_backward(const RecurrentPolicyParameters& params,
                       const std::vector<RecurrentStepCache>& caches,
                       const std::vector<Vec>& d_logits, const std::vector<double>& d_value) {
  const auto& spec = params.spec();
  require(caches.size() == d_logits.size() && caches.size() == d_value.size(),
          "recurrent_backward: sequence length mismatch");
  RecurrentPolicyParameters grads(spec);
  Vec dh_next = Vec::Zero(spec.hidden_dim);

  for (int t = static_cast<int>(caches.size()) - 1; t >= 0; --t) {
    const auto& c = caches[t];
    Vec dh = dh_next;
    grads.actor_w().noalias() += d_logits[t] * c.h.transpose();
    grads.actor_b() += d_logits[t];
    dh.noalias() += params.actor_w().transpose() * d_logits[t];
    grads.critic_w().noalias() += d_value[t] * c.h.transpose();
    grads.critic_b()[0] += d_value[t];
    dh.noalias() += params.critic_w().transpose() * d_value[t];

    Vec dhbar = dh.cwiseProduct(c.z);
    Vec dz = dh.cwiseProduct(c.hbar - c.h_prev);
    Vec dh_prev = dh.cwiseProduct(Vec::Ones(spec.hidden_dim) - c.z);

    Vec da_h = dhbar.array() * (1.0 - c.hbar.array().square());
    grads.w(2).noalias() += da_h * c.x.transpose();
    grads.u(2).noalias() += da_h * c.r.cwiseProduct(c.h_prev).transpose();
    grads.b(2) += da_h;
    Vec drh = params.u(2).transpose() * da_h;
    Vec dr = drh.cwiseProduct(c.h_prev);
    dh_prev += drh.cwiseProduct(c.r);

    Vec da_r = dr.array() * c.r.array() * (1.0 - c.r.array());
    grads.w(1).noalias() += da_r * c.x.transpose();
    grads.u(1).noalias() += da_r * c.h_prev.transpose();
    grads.b(1) += da_r;
    dh_prev.noalias() += params.u(1).transpose() * da_r;

    Vec da_z = dz.array() * c.z.array() * (1.0 - c.z.array());
    grads.w(0).noalias() += da_z * c.x.transpose();
    grads.u(0).noalias() += da_z * c.h_prev.transpose();
    grads.b(0) += da_z;
    dh_prev.noalias() += params.u(0).transpose() * da_z;

    dh_next = dh_prev;
  }
  return grads.flat();
}

void adam_update(Vec& theta, const Vec& grad, AdamState& state, const AdamConfig& cfg) {
  require(theta.size() == grad.size(), "adam_update: size mismatch");
  require(state.m.size() == theta.size() && state.v.size() == theta.size(),
          "adam_update: state size mismatch");
  if (!grad.allFinite()) throw NumericError("adam_update: non-finite gradient");
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  theta.array() -= cfg.lr * (state.m.array() / bc1) /
                   ((state.v.array() / bc2).sqrt() + cfg.eps);
}

void polyak_update(Vec& target, const Vec& online, double retain) {
  require(target.size() == online.size(), "polyak_update: size mismatch");
  require(retain >= 0.0 && retain <= 1.0, "polyak_update: retain outside [0,1]");
  target = retain * target + (1.0 - retain) * online;
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& theta,
                               double eps) {
  Vec g(theta.size());
  Vec probe = theta;
  for (int i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + eps;
    const double fp = f(probe);
    probe[i] = theta[i] - eps;
    const double fm = f(probe);
    probe[i] = theta[i];
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

double max_relative_error(const Vec& a, const Vec& b, double floor) {
  require(a.size() == b.size(), "max_relative_error: size mismatch");
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace choreo
