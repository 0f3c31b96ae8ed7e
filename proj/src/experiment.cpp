#include "choreo/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "choreo/checkpoint.hpp"

namespace choreo {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig::ExperimentConfig() {
  e2e.max_env_steps = 500000;
  fine_tune.max_env_steps = 50000;
}

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; })) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void parse_env(const json& j, EnvConfig& c) {
  check_keys(j, "env",
             {"eta", "aperture_scale", "aperture_max", "r_grasp", "grip_tol", "crush_tol",
              "eps_success", "horizon", "spawn_lo", "spawn_hi", "goal_z_lo", "goal_z_hi"});
  get_if(j, "eta", c.eta);
  get_if(j, "aperture_scale", c.aperture_scale);
  get_if(j, "aperture_max", c.aperture_max);
  get_if(j, "r_grasp", c.r_grasp);
  get_if(j, "grip_tol", c.grip_tol);
  get_if(j, "crush_tol", c.crush_tol);
  get_if(j, "eps_success", c.eps_success);
  get_if(j, "horizon", c.horizon);
  get_if(j, "spawn_lo", c.spawn_lo);
  get_if(j, "spawn_hi", c.spawn_hi);
  get_if(j, "goal_z_lo", c.goal_z_lo);
  get_if(j, "goal_z_hi", c.goal_z_hi);
}

void parse_ddpg(const json& j, const std::string& where, DdpgConfig& c) {
  check_keys(j, where,
             {"hidden", "gamma", "polyak_retain", "noise_sigma", "random_action_prob",
              "action_penalty", "lr"});
  get_if(j, "hidden", c.hidden);
  get_if(j, "gamma", c.gamma);
  get_if(j, "polyak_retain", c.polyak_retain);
  get_if(j, "noise_sigma", c.noise_sigma);
  get_if(j, "random_action_prob", c.random_action_prob);
  get_if(j, "action_penalty", c.action_penalty);
  get_if(j, "lr", c.adam.lr);
}

void parse_lse(const json& j, const std::string& where, LseTrainConfig& c) {
  check_keys(j, where,
             {"update_every", "batches_per_cadence", "batch_size", "k_future", "epoch_steps",
              "eval_episodes", "stop_success", "max_env_steps", "replay_capacity", "ddpg"});
  get_if(j, "update_every", c.update_every);
  get_if(j, "batches_per_cadence", c.batches_per_cadence);
  get_if(j, "batch_size", c.batch_size);
  get_if(j, "k_future", c.k_future);
  get_if(j, "epoch_steps", c.epoch_steps);
  get_if(j, "eval_episodes", c.eval_episodes);
  get_if(j, "stop_success", c.stop_success);
  get_if(j, "max_env_steps", c.max_env_steps);
  get_if(j, "replay_capacity", c.replay_capacity);
  if (j.contains("ddpg")) parse_ddpg(j.at("ddpg"), where + ".ddpg", c.ddpg);
}

void parse_hlc(const json& j, HlcTrainConfig& c) {
  check_keys(j, "hlc",
             {"gamma", "lambda", "entropy_coef", "value_coef", "workers",
              "rollouts_per_update", "lr", "eval_every", "eval_episodes", "stop_success",
              "stop_sequence_accuracy", "max_updates"});
  get_if(j, "gamma", c.gae.gamma);
  get_if(j, "lambda", c.gae.lambda);
  get_if(j, "entropy_coef", c.gae.entropy_coef);
  get_if(j, "value_coef", c.gae.value_coef);
  get_if(j, "workers", c.gae.workers);
  get_if(j, "rollouts_per_update", c.gae.rollouts_per_update);
  get_if(j, "lr", c.adam.lr);
  get_if(j, "eval_every", c.eval_every);
  get_if(j, "eval_episodes", c.eval_episodes);
  get_if(j, "stop_success", c.stop_success);
  get_if(j, "stop_sequence_accuracy", c.stop_sequence_accuracy);
  get_if(j, "max_updates", c.max_updates);
}

void parse_bc(const json& j, BcTrainConfig& c, int& demo_episodes) {
  check_keys(j, "bc",
             {"demo_episodes", "hidden", "lr", "episodes_per_round", "minibatch",
              "epochs_per_round", "eval_every", "eval_episodes", "stop_success"});
  get_if(j, "demo_episodes", demo_episodes);
  get_if(j, "hidden", c.hidden);
  get_if(j, "lr", c.adam.lr);
  get_if(j, "episodes_per_round", c.episodes_per_round);
  get_if(j, "minibatch", c.minibatch);
  get_if(j, "epochs_per_round", c.epochs_per_round);
  get_if(j, "eval_every", c.eval_every);
  get_if(j, "eval_episodes", c.eval_episodes);
  get_if(j, "stop_success", c.stop_success);
}

std::string time_stamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%H:%M:%S", std::localtime(&t));
  return buf;
}

double best_success(const std::vector<EvalPoint>& curve) {
  double best = 0.0;
  for (const auto& p : curve) best = std::max(best, p.success_rate);
  return best;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  ExperimentConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  try {
    check_keys(j, "top level",
               {"env", "geometry", "seeds", "out_dir", "success_threshold",
                "record_wall_clock", "lse", "e2e", "fine_tune", "hlc", "bc"});
    if (j.contains("env")) parse_env(j.at("env"), cfg.env);
    get_if(j, "geometry", cfg.geometry);
    get_if(j, "seeds", cfg.seeds);
    get_if(j, "out_dir", cfg.out_dir);
    get_if(j, "success_threshold", cfg.success_threshold);
    get_if(j, "record_wall_clock", cfg.record_wall_clock);
    if (j.contains("lse")) parse_lse(j.at("lse"), "lse", cfg.lse);
    if (j.contains("e2e")) parse_lse(j.at("e2e"), "e2e", cfg.e2e);
    if (j.contains("fine_tune")) parse_lse(j.at("fine_tune"), "fine_tune", cfg.fine_tune);
    if (j.contains("hlc")) parse_hlc(j.at("hlc"), cfg.hlc);
    if (j.contains("bc")) parse_bc(j.at("bc"), cfg.bc, cfg.bc_demo_episodes);
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value in " + path + ": " + e.what());
  }
  geometry_from_name(cfg.geometry);
  if (cfg.seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (cfg.bc_demo_episodes <= 0) throw ConfigError("config: demo_episodes must be positive");
  return cfg;
}

std::string lse_checkpoint_path(const ExperimentConfig& cfg, Subtask st, std::uint64_t seed) {
  return cfg.out_dir + "/lse_" + subtask_name(st) + "_seed" + std::to_string(seed) + ".ckpt";
}

std::string bc_checkpoint_path(const ExperimentConfig& cfg, Subtask st, std::uint64_t seed) {
  return cfg.out_dir + "/bc_" + subtask_name(st) + "_seed" + std::to_string(seed) + ".ckpt";
}

std::string hlc_checkpoint_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.out_dir + "/hlc_seed" + std::to_string(seed) + ".ckpt";
}

std::string e2e_checkpoint_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.out_dir + "/e2e_seed" + std::to_string(seed) + ".ckpt";
}

std::string tuned_checkpoint_path(const ExperimentConfig& cfg, const std::string& geometry,
                                  std::uint64_t seed) {
  return cfg.out_dir + "/lse_retract_" + geometry + "_seed" + std::to_string(seed) + ".ckpt";
}

std::string metrics_path(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.out_dir + "/metrics_seed" + std::to_string(seed) + ".csv";
}

std::array<SubtaskPolicy, 3> load_expert_policies(const ExperimentConfig& cfg,
                                                  std::uint64_t seed) {
  std::array<SubtaskPolicy, 3> experts;
  for (Subtask st : kAllSubtasks) {
    const std::string path = lse_checkpoint_path(cfg, st, seed);
    if (!fs::exists(path)) {
      throw ConfigError("missing expert checkpoint " + path);
    }
    experts[static_cast<int>(st)] = load_policy(path);
  }
  return experts;
}

CurriculumResult run_curriculum(const ExperimentConfig& cfg, std::uint64_t seed) {
  fs::create_directories(cfg.out_dir);
  const ObjectGeometry geom = geometry_from_name(cfg.geometry);
  const std::string mpath = metrics_path(cfg, seed);
  fs::remove(mpath);
  MetricsWriter metrics(mpath, cfg.record_wall_clock);

  CurriculumResult out;
  out.metrics_file = mpath;

  for (Subtask st : kAllSubtasks) {
    const char* name = subtask_name(st);
    std::printf("[curriculum %s] expert %s: start\n", time_stamp().c_str(), name);
    std::fflush(stdout);
    const std::string ckpt = lse_checkpoint_path(cfg, st, seed);
    Rng rng(seed);
    TrainCallbacks cb;
    cb.on_eval = [&](const EvalPoint& p) {
      metrics.append({"ddpg_lse", name, p.env_steps, p.success_rate, p.wall_seconds, seed});
    };
    cb.on_improved = [&](const DdpgAgent& agent, const EvalPoint& p) {
      save_agent_checkpoint(ckpt, agent, name, seed, p.env_steps);
    };
    LseTrainResult res = train_lse(cfg.env, geom, st, cfg.lse, rng, cb);
    save_agent_checkpoint(ckpt, res.best_agent, name, seed, res.env_steps);
    const double best = best_success(res.curve);
    out.stages.push_back({name, res.converged, res.env_steps, best, ckpt});
    if (!res.converged) out.degraded = true;
    std::printf("[curriculum %s] expert %s: %s at %ld env steps, best success %.2f\n",
                time_stamp().c_str(), name, res.converged ? "converged" : "budget exhausted",
                res.env_steps, best);
    std::fflush(stdout);
  }

  std::array<SubtaskPolicy, 3> experts = load_expert_policies(cfg, seed);

  std::printf("[curriculum %s] choreographer: start\n", time_stamp().c_str());
  std::fflush(stdout);
  const std::string hpath = hlc_checkpoint_path(cfg, seed);
  Rng rng(seed);
  HlcTrainCallbacks hcb;
  hcb.on_eval = [&](const HlcEvalPoint& p) {
    metrics.append({"hlc", "hlc", p.env_steps, p.success_rate, p.wall_seconds, seed,
                    p.sequence_accuracy});
  };
  hcb.on_improved = [&](const RecurrentPolicyParameters& params, const HlcEvalPoint& p) {
    AdamState adam(static_cast<int>(params.flat().size()));
    save_hlc_checkpoint(hpath, params, adam, seed, p.env_steps);
  };
  HlcTrainResult hres = train_hlc(cfg.env, geom, experts, cfg.hlc, rng, hcb);
  {
    AdamState adam(static_cast<int>(hres.best_params.flat().size()));
    save_hlc_checkpoint(hpath, hres.best_params, adam, seed, hres.env_steps);
  }
  double hbest = 0.0;
  for (const auto& p : hres.curve) hbest = std::max(hbest, p.success_rate);
  out.stages.push_back({"hlc", hres.converged, hres.env_steps, hbest, hpath});
  if (!hres.converged) out.degraded = true;
  std::printf("[curriculum %s] choreographer: %s at %ld env steps, best success %.2f\n",
              time_stamp().c_str(), hres.converged ? "converged" : "budget exhausted",
              hres.env_steps, hbest);
  std::fflush(stdout);
  return out;
}

FineTuneResult fine_tune_retract(const ExperimentConfig& cfg, const std::string& geometry,
                                 std::uint64_t seed) {
  const ObjectGeometry geom = geometry_from_name(geometry);
  const std::string base = lse_checkpoint_path(cfg, Subtask::kRetract, seed);
  if (!fs::exists(base)) {
    throw ConfigError("fine_tune: missing base retract checkpoint " + base);
  }
  AgentCheckpoint start = load_agent_checkpoint(base);
  if (start.role != subtask_name(Subtask::kRetract)) {
    throw ConfigError("fine_tune: " + base + " holds role '" + start.role +
                      "', expected retract");
  }

  const std::string mpath =
      cfg.out_dir + "/metrics_ft_" + geometry + "_seed" + std::to_string(seed) + ".csv";
  fs::remove(mpath);
  MetricsWriter metrics(mpath, cfg.record_wall_clock);
  const std::string ckpt = tuned_checkpoint_path(cfg, geometry, seed);

  Rng rng(seed);
  TrainCallbacks cb;
  cb.on_eval = [&](const EvalPoint& p) {
    metrics.append({"ddpg_lse_ft", "retract", p.env_steps, p.success_rate, p.wall_seconds,
                    seed});
  };
  cb.on_improved = [&](const DdpgAgent& agent, const EvalPoint& p) {
    save_agent_checkpoint(ckpt, agent, subtask_name(Subtask::kRetract), seed, p.env_steps);
  };
  LseTrainResult res = fine_tune_lse(start.agent, cfg.env, geom, Subtask::kRetract,
                                     cfg.fine_tune, rng, cb);
  save_agent_checkpoint(ckpt, res.best_agent, subtask_name(Subtask::kRetract), seed,
                        res.env_steps);
  return {std::move(res), ckpt, mpath};
}

std::vector<ActivationRow> activation_dump(const EnvConfig& env_cfg, ObjectGeometry geometry,
                                           const std::vector<LabeledPolicies>& sets,
                                           int episodes, std::uint64_t seed) {
  require(episodes > 0, "activation_dump: episodes must be positive");
  require(!sets.empty(), "activation_dump: no policy sets");
  std::vector<ActivationRow> rows;
  rows.reserve(sets.size() * static_cast<std::size_t>(episodes) * env_cfg.horizon);
  for (const auto& set : sets) {
    require(!set.label.empty(), "activation_dump: unlabeled policy set");
    if (!set.flat) {
      for (const auto& p : set.windowed) {
        if (!p) throw ConfigError("activation_dump: incomplete expert set " + set.label);
      }
    }
    KinematicEnv env(env_cfg, geometry);
    Rng root(seed);
    for (int e = 0; e < episodes; ++e) {
      Rng ep_rng = root.fork(static_cast<std::uint64_t>(e));
      env.reset(ep_rng);
      for (int t = 0; t < env_cfg.horizon; ++t) {
        Subtask active = Subtask::kRetract;
        for (Subtask st : kAllSubtasks) {
          const int start = subtask_window_start(st);
          if (t >= start && t < start + subtask_budget(st)) active = st;
        }
        const Vec obs = env.observation();
        const Action a = set.flat ? set.flat(obs, env.state().goal)
                                  : set.windowed[static_cast<int>(active)](
                                        obs, subgoal(active, env.state()));
        rows.push_back({set.label, e, t, subtask_name(active), a});
        env.step(a);
      }
    }
  }
  return rows;
}

void write_activation_csv(const std::string& path, const std::vector<ActivationRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("write_activation_csv: cannot open " + path);
  out << "policy_label,episode,step,subtask_label,a_x,a_y,a_z,a_grip\n";
  std::string line;
  for (const auto& r : rows) {
    line = r.policy_label + ',' + std::to_string(r.episode) + ',' + std::to_string(r.step) +
           ',' + r.subtask_label + ',';
    for (int i = 0; i < 4; ++i) {
      append_csv_double(line, r.action[i]);
      if (i < 3) line += ',';
    }
    out << line << "\n";
  }
  if (!out) throw ConfigError("write_activation_csv: write failed on " + path);
}

std::array<double, 3> mean_action_distance(const std::vector<ActivationRow>& rows,
                                           const std::string& label_a,
                                           const std::string& label_b) {
  std::vector<const ActivationRow*> a, b;
  for (const auto& r : rows) {
    if (r.policy_label == label_a) a.push_back(&r);
    if (r.policy_label == label_b) b.push_back(&r);
  }
  require(!a.empty() && a.size() == b.size(),
          "mean_action_distance: labels missing or of different length");
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  std::array<long, 3> count{0, 0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i]->episode == b[i]->episode && a[i]->step == b[i]->step,
            "mean_action_distance: rows are not aligned");
    const int st = static_cast<int>(subtask_from_name(a[i]->subtask_label));
    sum[st] += (a[i]->action - b[i]->action).norm();
    count[st] += 1;
  }
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    require(count[i] > 0, "mean_action_distance: no rows for some subtask");
    mean[i] = sum[i] / static_cast<double>(count[i]);
  }
  return mean;
}

double mean_translation_magnitude(const std::vector<ActivationRow>& rows,
                                  const std::string& label, Subtask st) {
  double sum = 0.0;
  long count = 0;
  const std::string want = subtask_name(st);
  for (const auto& r : rows) {
    if (r.policy_label == label && r.subtask_label == want) {
      sum += r.action.head<3>().norm();
      count += 1;
    }
  }
  require(count > 0, "mean_translation_magnitude: no matching rows");
  return sum / static_cast<double>(count);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> v) {
  if (v.empty()) return kInf;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string steps_cell(double v) {
  if (v == kInf) return "not reached";
  std::ostringstream ss;
  ss << static_cast<long>(v + 0.5);
  return ss.str();
}

std::string time_cell(double seconds) {
  if (seconds <= 0.0 || seconds == kInf) return "-";
  std::ostringstream ss;
  if (seconds < 90.0) {
    ss << std::fixed << std::setprecision(0) << seconds << " s";
  } else {
    ss << std::fixed << std::setprecision(1) << seconds / 60.0 << " min";
  }
  return ss.str();
}

struct ReportLine {
  std::string name;
  std::array<std::string, 6> cells;  // approach, manipulate, retract, hlc, total, time
  int seeds = 0;
};

void format_table(std::ostringstream& out, const std::vector<ReportLine>& lines,
                  bool with_seeds) {
  const std::array<std::string, 7> head = {"method",   "approach", "manipulate", "retract",
                                           "hlc",      "total",    "time"};
  std::array<std::size_t, 7> width{};
  width[0] = head[0].size();
  for (const auto& l : lines) width[0] = std::max(width[0], l.name.size());
  for (int c = 0; c < 6; ++c) {
    width[c + 1] = head[c + 1].size();
    for (const auto& l : lines) width[c + 1] = std::max(width[c + 1], l.cells[c].size());
  }
  auto pad = [&](const std::string& s, std::size_t w) {
    out << s << std::string(w - s.size() + 2, ' ');
  };
  pad(head[0], width[0]);
  for (int c = 0; c < 6; ++c) pad(head[c + 1], width[c + 1]);
  if (with_seeds) out << "seeds";
  out << "\n";
  for (const auto& l : lines) {
    pad(l.name, width[0]);
    for (int c = 0; c < 6; ++c) pad(l.cells[c], width[c + 1]);
    if (with_seeds) out << l.seeds;
    out << "\n";
  }
}

}  // namespace

std::string compare_report(const std::vector<std::string>& metrics_files,
                           const ReportOptions& opts) {
  std::vector<MetricsRow> rows;
  for (const auto& f : metrics_files) {
    auto part = load_metrics(f);
    rows.insert(rows.end(), part.begin(), part.end());
  }

  auto seeds_of = [&](const std::string& method) {
    std::set<std::uint64_t> s;
    for (const auto& r : rows) {
      if (r.method == method) s.insert(r.seed);
    }
    return s;
  };
  auto has_rows = [&](const std::string& method, const std::string& subtask,
                      std::uint64_t seed) {
    return std::any_of(rows.begin(), rows.end(), [&](const MetricsRow& r) {
      return r.method == method && r.subtask == subtask && r.seed == seed;
    });
  };
  auto crossing = [&](const std::string& method, const std::string& subtask,
                      std::uint64_t seed) {
    const long c = first_crossing(rows, method, subtask, seed, opts.threshold);
    return c < 0 ? kInf : static_cast<double>(c);
  };
  auto stage_wall = [&](const std::string& method, const std::string& subtask,
                        std::uint64_t seed) {
    double w = 0.0;
    for (const auto& r : rows) {
      if (r.method == method && r.subtask == subtask && r.seed == seed) {
        w = std::max(w, r.wall_clock_seconds);
      }
    }
    return w;
  };

  const std::array<const char*, 3> stage_names = {"approach", "manipulate", "retract"};
  auto staged_line = [&](const std::string& name, const std::string& lse_method,
                         const std::string& hlc_method) {
    ReportLine line;
    line.name = name;
    std::set<std::uint64_t> seeds = seeds_of(lse_method);
    line.seeds = static_cast<int>(seeds.size());
    if (seeds.empty()) {
      line.cells = {"-", "-", "-", "-", "-", "-"};
      return line;
    }
    std::array<std::vector<double>, 4> stage_cross;
    std::vector<double> totals, walls;
    for (std::uint64_t seed : seeds) {
      double total = 0.0, wall = 0.0;
      bool complete = true;
      for (int s = 0; s < 4; ++s) {
        const std::string& method = s < 3 ? lse_method : hlc_method;
        const char* sub = s < 3 ? stage_names[s] : "hlc";
        if (!has_rows(method, sub, seed)) {
          complete = false;
          continue;
        }
        const double c = crossing(method, sub, seed);
        stage_cross[s].push_back(c);
        total += c;
        wall += stage_wall(method, sub, seed);
      }
      if (complete) {
        totals.push_back(total);
        walls.push_back(wall);
      }
    }
    for (int s = 0; s < 4; ++s) {
      line.cells[s] = stage_cross[s].empty() ? "-" : steps_cell(median_of(stage_cross[s]));
    }
    line.cells[4] = totals.empty() ? "-" : steps_cell(median_of(totals));
    line.cells[5] = walls.empty() ? "-" : time_cell(median_of(walls));
    return line;
  };

  ReportLine e2e_line;
  e2e_line.name = "DDPG+HER end-to-end";
  {
    std::set<std::uint64_t> seeds = seeds_of("ddpg_e2e");
    e2e_line.seeds = static_cast<int>(seeds.size());
    if (seeds.empty()) {
      e2e_line.cells = {"-", "-", "-", "-", "-", "-"};
    } else {
      std::vector<double> totals, walls;
      for (std::uint64_t seed : seeds) {
        totals.push_back(crossing("ddpg_e2e", "e2e", seed));
        walls.push_back(stage_wall("ddpg_e2e", "e2e", seed));
      }
      e2e_line.cells = {"-", "-", "-", "-", steps_cell(median_of(totals)),
                        time_cell(median_of(walls))};
    }
  }

  std::ostringstream out;
  out << "Env steps to reach success rate " << opts.threshold
      << " (medians over seeds)\n\n";
  std::vector<ReportLine> measured = {
      e2e_line,
      staged_line("BC LSE", "bc_lse", "hlc_bc"),
      staged_line("DDPG+HER LSE", "ddpg_lse", "hlc"),
  };
  format_table(out, measured, true);

  out << "\nPublished reference, Fetch pick-and-place benchmark (reported values):\n\n";
  std::vector<ReportLine> reference = {
      {"DDPG+HER end-to-end", {"-", "-", "-", "-", "1.4M", "~1 h"}, 0},
      {"BC LSE", {"152k", "52k", "168k", "98k", "470k", "~25 min"}, 0},
      {"DDPG+HER LSE", {"150k", "30k", "38k", "98k", "316k", "~18 min"}, 0},
  };
  format_table(out, reference, false);
  return out.str();
}

}  // namespace choreo
