#include "choreo/bc.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "choreo/checkpoint.hpp"

namespace choreo {

DemoDataset collect_demos(const EnvConfig& env_cfg, ObjectGeometry geometry,
                          Subtask st, int n_episodes, Rng& rng) {
  if (n_episodes <= 0) throw ConfigError("collect_demos: n_episodes must be positive");
  const int budget = subtask_budget(st);
  const long total = static_cast<long>(n_episodes) * budget;
  DemoDataset d;
  d.subtask = st;
  d.inputs.resize(KinematicEnv::kObsDim + 3, total);
  d.actions.resize(4, total);

  KinematicEnv env(env_cfg, geometry);
  auto oracles = make_oracle_policies(env_cfg, geometry);
  const SubtaskPolicy& expert = oracles[static_cast<int>(st)];
  long col = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    env.reset(rng);
    run_window_prefix(env, st, oracles);
    for (int k = 0; k < budget; ++k) {
      const Vec obs = env.observation();
      const Vec3 goal = subgoal(st, env.state());
      const Action a = expert(obs, goal);
      d.inputs.col(col).head(KinematicEnv::kObsDim) = obs;
      d.inputs.col(col).tail<3>() = goal;
      d.actions.col(col) = a;
      ++col;
      env.step(a);
    }
  }
  return d;
}

namespace {

void append_number(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, res.ptr);
}

std::string demo_header() {
  std::string h;
  for (int i = 0; i < KinematicEnv::kObsDim; ++i) {
    h += "obs_" + std::to_string(i) + ",";
  }
  h += "sg_x,sg_y,sg_z,a_x,a_y,a_z,a_grip";
  return h;
}

}  // namespace

void save_demos(const std::string& path, const DemoDataset& d) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("save_demos: cannot open " + path);
  out << demo_header() << "\n";
  std::string line;
  for (long c = 0; c < d.pairs(); ++c) {
    line.clear();
    for (int i = 0; i < d.inputs.rows(); ++i) {
      append_number(line, d.inputs(i, c));
      line += ',';
    }
    for (int i = 0; i < 4; ++i) {
      append_number(line, d.actions(i, c));
      if (i < 3) line += ',';
    }
    out << line << "\n";
  }
  out.flush();
  if (!out) throw ConfigError("save_demos: write failed for " + path);
}

DemoDataset load_demos(const std::string& path, Subtask st) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_demos: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != demo_header()) {
    throw ConfigError("load_demos: unexpected header in " + path);
  }
  const int in_dim = KinematicEnv::kObsDim + 3;
  const int cols = in_dim + 4;
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (int i = 0; i < cols; ++i) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw ConfigError("load_demos: bad value in " + path);
      if (!std::isfinite(v)) throw ConfigError("load_demos: non-finite value in " + path);
      values.push_back(v);
      p = res.ptr;
      if (i < cols - 1) {
        if (p == end || *p != ',') throw ConfigError("load_demos: bad row in " + path);
        ++p;
      }
    }
    if (p != end) throw ConfigError("load_demos: trailing data in " + path);
    ++rows;
  }
  DemoDataset d;
  d.subtask = st;
  d.inputs.resize(in_dim, rows);
  d.actions.resize(4, rows);
  for (long r = 0; r < rows; ++r) {
    const double* row = values.data() + static_cast<long>(r) * cols;
    for (int i = 0; i < in_dim; ++i) d.inputs(i, r) = row[i];
    for (int i = 0; i < 4; ++i) {
      const double a = row[in_dim + i];
      if (a < -1.0 || a > 1.0) throw ConfigError("load_demos: action out of bounds in " + path);
      d.actions(i, r) = a;
    }
  }
  return d;
}

double bc_loss(const MlpParameters& actor, const Mat& inputs, const Mat& actions) {
  require(inputs.cols() == actions.cols(), "bc_loss: column count mismatch");
  require(inputs.cols() > 0, "bc_loss: empty batch");
  const Mat out = mlp_forward(actor, inputs);
  return (out - actions).squaredNorm() / static_cast<double>(out.size());
}

double bc_update(MlpParameters& actor, AdamState& adam, const AdamConfig& adam_cfg,
                 const Mat& inputs, const Mat& actions) {
  require(inputs.cols() == actions.cols(), "bc_update: column count mismatch");
  require(inputs.cols() > 0, "bc_update: empty batch");
  MlpCache cache;
  const Mat out = mlp_forward(actor, inputs, &cache);
  const Mat diff = out - actions;
  const double n = static_cast<double>(out.size());
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) throw NumericError("bc_update: non-finite loss");
  const Mat d_out = (2.0 / n) * diff;
  MlpGradients g = mlp_backward(actor, cache, d_out);
  adam_update(actor.flat(), g.dtheta, adam, adam_cfg);
  return loss;
}

SubtaskPolicy BcTrainResult::policy() const {
  MlpParameters net = best_actor;
  Vec center = in_center;
  Vec scale = in_scale;
  const double clip = in_clip;
  return [net, center, scale, clip](const Vec& obs, const Vec3& goal) -> Action {
    Vec in(center.size());
    in << obs, goal;
    in = (in - center).cwiseQuotient(scale).cwiseMax(-clip).cwiseMin(clip);
    return Action(mlp_forward(net, in));
  };
}

long BcTrainResult::steps_to_success(double threshold) const {
  for (const EvalPoint& pt : curve) {
    if (pt.success_rate >= threshold) return pt.env_steps;
  }
  return -1;
}

BcTrainResult train_bc_lse(const EnvConfig& env_cfg, ObjectGeometry geometry,
                           const DemoDataset& demos, const BcTrainConfig& cfg,
                           Rng& rng, const BcTrainCallbacks& callbacks) {
  if (demos.pairs() <= 0) throw ConfigError("train_bc_lse: empty dataset");
  const int in_dim = KinematicEnv::kObsDim + 3;
  if (demos.inputs.rows() != in_dim || demos.actions.rows() != 4 ||
      demos.inputs.cols() != demos.actions.cols()) {
    throw ConfigError("train_bc_lse: dataset shape mismatch");
  }
  if (cfg.episodes_per_round <= 0 || cfg.minibatch <= 0 || cfg.epochs_per_round <= 0 ||
      cfg.eval_every <= 0 || cfg.eval_episodes <= 0) {
    throw ConfigError("train_bc_lse: counts must be positive");
  }

  DdpgConfig norm;
  fill_input_normalization(norm, env_cfg);
  Vec center(in_dim);
  Vec scale(in_dim);
  center << norm.obs_center, norm.goal_center;
  scale << norm.obs_scale, norm.goal_scale;
  const double clip = norm.norm_clip;
  Mat inputs = (demos.inputs.colwise() - center);
  inputs = (inputs.array().colwise() / scale.array()).matrix();
  inputs = inputs.cwiseMax(-clip).cwiseMin(clip);

  MlpSpec spec{in_dim, cfg.hidden, 4, OutputActivation::kTanh};
  MlpParameters actor(spec);
  Rng init_rng = rng.fork(0);
  actor.init(init_rng);
  AdamState adam(spec.param_count());
  Rng shuffle_rng = rng.fork(1);
  Rng eval_rng = rng.fork(3);

  BcTrainResult result{actor, center, scale, clip};
  const long total = demos.pairs();
  const long round_pairs =
      static_cast<long>(cfg.episodes_per_round) * subtask_budget(demos.subtask);
  long released = 0;
  long next_eval = cfg.eval_every;
  double best = -1.0;
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<long> order;
  Mat batch_in(in_dim, cfg.minibatch);
  Mat batch_act(4, cfg.minibatch);
  while (released < total && !result.converged) {
    released = std::min(total, released + round_pairs);
    order.resize(released);
    std::iota(order.begin(), order.end(), 0L);
    for (int epoch = 0; epoch < cfg.epochs_per_round; ++epoch) {
      for (long i = released - 1; i > 0; --i) {
        const long j = shuffle_rng.uniform_int(0, static_cast<int>(i));
        std::swap(order[i], order[j]);
      }
      for (long b0 = 0; b0 < released; b0 += cfg.minibatch) {
        const long n = std::min<long>(cfg.minibatch, released - b0);
        for (long k = 0; k < n; ++k) {
          batch_in.col(k) = inputs.col(order[b0 + k]);
          batch_act.col(k) = demos.actions.col(order[b0 + k]);
        }
        bc_update(actor, adam, cfg.adam, batch_in.leftCols(n), batch_act.leftCols(n));
      }
    }
    if (released >= next_eval || released == total) {
      while (next_eval <= released) next_eval += cfg.eval_every;
      BcTrainResult probe{actor, center, scale, clip};
      const double success = evaluate_lse(probe.policy(), demos.subtask, env_cfg,
                                          geometry, cfg.eval_episodes, eval_rng);
      EvalPoint pt;
      pt.env_steps = released;
      pt.success_rate = success;
      pt.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.curve.push_back(pt);
      if (callbacks.on_eval) callbacks.on_eval(pt);
      if (success >= best) {
        best = success;
        result.best_actor = actor;
      }
      if (success >= cfg.stop_success) result.converged = true;
    }
  }
  if (best < 0.0) result.best_actor = actor;
  result.env_steps = released;
  return result;
}

void save_bc_checkpoint(const std::string& path, const BcTrainResult& result,
                        Subtask st, std::uint64_t seed) {
  CheckpointWriter w;
  w.put_str("role", std::string("bc_") + subtask_name(st));
  w.put_int("seed", static_cast<std::int64_t>(seed));
  w.put_int("env_steps", result.env_steps);
  Vec hidden(result.best_actor.spec().hidden.size());
  for (size_t i = 0; i < result.best_actor.spec().hidden.size(); ++i) {
    hidden[static_cast<long>(i)] = result.best_actor.spec().hidden[i];
  }
  w.put_vec("hidden", hidden);
  w.put_vec("in_center", result.in_center);
  w.put_vec("in_scale", result.in_scale);
  w.put_vec("config", Vec::Constant(1, result.in_clip));
  w.put_vec("actor", result.best_actor.flat());
  w.save(path);
}

SubtaskPolicy load_bc_policy(const std::string& path) {
  CheckpointReader r(path);
  const std::string role = r.str("role");
  if (role.rfind("bc_", 0) != 0) {
    throw ConfigError("load_bc_policy: wrong checkpoint role '" + role + "' in " + path);
  }
  const Vec hidden = r.vec("hidden");
  std::vector<int> h(hidden.size());
  for (long i = 0; i < hidden.size(); ++i) h[static_cast<size_t>(i)] = static_cast<int>(hidden[i]);
  const Vec center = r.vec("in_center");
  const Vec scale = r.vec("in_scale");
  const Vec config = r.vec("config");
  if (config.size() != 1) throw ConfigError("load_bc_policy: bad config block in " + path);
  const int in_dim = KinematicEnv::kObsDim + 3;
  if (center.size() != in_dim || scale.size() != in_dim) {
    throw ConfigError("load_bc_policy: bad normalization block in " + path);
  }
  MlpSpec spec{in_dim, h, 4, OutputActivation::kTanh};
  MlpParameters actor(spec);
  const Vec flat = r.vec("actor");
  if (flat.size() != actor.flat().size()) {
    throw ConfigError("load_bc_policy: parameter size mismatch in " + path);
  }
  actor.flat() = flat;
  BcTrainResult view{actor, center, scale, config[0]};
  return view.policy();
}

}  // namespace choreo
