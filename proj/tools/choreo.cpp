#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "choreo/checkpoint.hpp"
#include "choreo/experiment.hpp"

namespace fs = std::filesystem;
using namespace choreo;

namespace {

struct CommonArgs {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  long steps = -1;
  int workers = -1;
  bool wall_clock = false;
  double threshold = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON config file; defaults reproduce the reference experiment");
  cmd->add_option("--seed", a.seed, "run only this seed instead of the configured list")
      ->each([&](const std::string&) { a.seed_set = true; });
  cmd->add_option("--out", a.out, "artifact directory (checkpoints, metrics)");
  cmd->add_option("--steps", a.steps, "override the training step budget");
  cmd->add_option("--workers", a.workers, "override the choreographer worker count");
  cmd->add_flag("--wall-clock", a.wall_clock,
                "record real wall times in metrics files (breaks byte-for-byte reruns)");
  cmd->add_option("--threshold", a.threshold, "success threshold for report crossings");
}

ExperimentConfig resolve(const CommonArgs& a) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (a.seed_set) cfg.seeds = {a.seed};
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.workers >= 1) cfg.hlc.gae.workers = a.workers;
  if (a.wall_clock) cfg.record_wall_clock = true;
  if (a.threshold > 0.0) cfg.success_threshold = a.threshold;
  return cfg;
}

void print_curve_point(const char* what, const EvalPoint& p) {
  std::printf("[%s] env_steps=%ld success=%.3f\n", what, p.env_steps, p.success_rate);
  std::fflush(stdout);
}

int cmd_train_lse(const CommonArgs& args, const std::string& subtask) {
  ExperimentConfig cfg = resolve(args);
  if (args.steps > 0) cfg.lse.max_env_steps = args.steps;
  const Subtask st = subtask_from_name(subtask);
  const ObjectGeometry geom = geometry_from_name(cfg.geometry);
  fs::create_directories(cfg.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    const std::string mpath = cfg.out_dir + "/metrics_lse_" + subtask + "_seed" +
                              std::to_string(seed) + ".csv";
    fs::remove(mpath);
    MetricsWriter metrics(mpath, cfg.record_wall_clock);
    const std::string ckpt = lse_checkpoint_path(cfg, st, seed);
    Rng rng(seed);
    TrainCallbacks cb;
    cb.on_eval = [&](const EvalPoint& p) {
      metrics.append({"ddpg_lse", subtask, p.env_steps, p.success_rate, p.wall_seconds, seed});
      print_curve_point(subtask.c_str(), p);
    };
    cb.on_improved = [&](const DdpgAgent& agent, const EvalPoint& p) {
      save_agent_checkpoint(ckpt, agent, subtask, seed, p.env_steps);
    };
    LseTrainResult res = train_lse(cfg.env, geom, st, cfg.lse, rng, cb);
    save_agent_checkpoint(ckpt, res.best_agent, subtask, seed, res.env_steps);
    std::printf("seed %llu: %s after %ld env steps; checkpoint %s; metrics %s\n",
                static_cast<unsigned long long>(seed),
                res.converged ? "converged" : "stopped at budget", res.env_steps,
                ckpt.c_str(), mpath.c_str());
  }
  return 0;
}

int cmd_train_hlc(const CommonArgs& args) {
  ExperimentConfig cfg = resolve(args);
  if (args.steps > 0) cfg.hlc.max_updates = static_cast<int>(args.steps);
  const ObjectGeometry geom = geometry_from_name(cfg.geometry);
  fs::create_directories(cfg.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    std::array<SubtaskPolicy, 3> experts = load_expert_policies(cfg, seed);
    const std::string mpath =
        cfg.out_dir + "/metrics_hlc_seed" + std::to_string(seed) + ".csv";
    fs::remove(mpath);
    MetricsWriter metrics(mpath, cfg.record_wall_clock);
    const std::string ckpt = hlc_checkpoint_path(cfg, seed);
    Rng rng(seed);
    HlcTrainCallbacks cb;
    cb.on_eval = [&](const HlcEvalPoint& p) {
      metrics.append({"hlc", "hlc", p.env_steps, p.success_rate, p.wall_seconds, seed,
                      p.sequence_accuracy});
      std::printf("[hlc] env_steps=%ld success=%.3f sequence_accuracy=%.3f\n", p.env_steps,
                  p.success_rate, p.sequence_accuracy);
      std::fflush(stdout);
    };
    cb.on_improved = [&](const RecurrentPolicyParameters& params, const HlcEvalPoint& p) {
      AdamState adam(static_cast<int>(params.flat().size()));
      save_hlc_checkpoint(ckpt, params, adam, seed, p.env_steps);
    };
    HlcTrainResult res = train_hlc(cfg.env, geom, experts, cfg.hlc, rng, cb);
    AdamState adam(static_cast<int>(res.best_params.flat().size()));
    save_hlc_checkpoint(ckpt, res.best_params, adam, seed, res.env_steps);
    std::printf("seed %llu: %s after %ld env steps; checkpoint %s; metrics %s\n",
                static_cast<unsigned long long>(seed),
                res.converged ? "converged" : "stopped at budget", res.env_steps,
                ckpt.c_str(), mpath.c_str());
  }
  return 0;
}

int cmd_train_e2e(const CommonArgs& args) {
  ExperimentConfig cfg = resolve(args);
  if (args.steps > 0) cfg.e2e.max_env_steps = args.steps;
  const ObjectGeometry geom = geometry_from_name(cfg.geometry);
  fs::create_directories(cfg.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    const std::string mpath =
        cfg.out_dir + "/metrics_e2e_seed" + std::to_string(seed) + ".csv";
    fs::remove(mpath);
    MetricsWriter metrics(mpath, cfg.record_wall_clock);
    const std::string ckpt = e2e_checkpoint_path(cfg, seed);
    Rng rng(seed);
    TrainCallbacks cb;
    cb.on_eval = [&](const EvalPoint& p) {
      metrics.append({"ddpg_e2e", "e2e", p.env_steps, p.success_rate, p.wall_seconds, seed});
      print_curve_point("e2e", p);
    };
    cb.on_improved = [&](const DdpgAgent& agent, const EvalPoint& p) {
      save_agent_checkpoint(ckpt, agent, "end_to_end", seed, p.env_steps);
    };
    LseTrainResult res = train_end_to_end(cfg.env, geom, cfg.e2e, rng, cb);
    save_agent_checkpoint(ckpt, res.best_agent, "end_to_end", seed, res.env_steps);
    std::printf("seed %llu: %s after %ld env steps; checkpoint %s; metrics %s\n",
                static_cast<unsigned long long>(seed),
                res.converged ? "converged" : "stopped at budget", res.env_steps,
                ckpt.c_str(), mpath.c_str());
  }
  return 0;
}

int cmd_train_bc(const CommonArgs& args, const std::string& subtask,
                 const std::string& demos_in, const std::string& demos_out) {
  ExperimentConfig cfg = resolve(args);
  const Subtask st = subtask_from_name(subtask);
  const ObjectGeometry geom = geometry_from_name(cfg.geometry);
  fs::create_directories(cfg.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    Rng rng(seed);
    DemoDataset demos;
    if (!demos_in.empty()) {
      demos = load_demos(demos_in, st);
    } else {
      Rng demo_rng = rng.fork(7);
      demos = collect_demos(cfg.env, geom, st, cfg.bc_demo_episodes, demo_rng);
    }
    if (!demos_out.empty()) save_demos(demos_out, demos);
    std::printf("seed %llu: %ld demonstration pairs\n",
                static_cast<unsigned long long>(seed), demos.pairs());
    const std::string mpath = cfg.out_dir + "/metrics_bc_" + subtask + "_seed" +
                              std::to_string(seed) + ".csv";
    fs::remove(mpath);
    MetricsWriter metrics(mpath, cfg.record_wall_clock);
    BcTrainCallbacks cb;
    cb.on_eval = [&](const EvalPoint& p) {
      metrics.append({"bc_lse", subtask, p.env_steps, p.success_rate, p.wall_seconds, seed});
      print_curve_point(("bc " + subtask).c_str(), p);
    };
    BcTrainResult res = train_bc_lse(cfg.env, geom, demos, cfg.bc, rng, cb);
    const std::string ckpt = bc_checkpoint_path(cfg, st, seed);
    save_bc_checkpoint(ckpt, res, st, seed);
    std::printf("seed %llu: %s after %ld released pairs; checkpoint %s; metrics %s\n",
                static_cast<unsigned long long>(seed),
                res.converged ? "converged" : "stopped at dataset end", res.env_steps,
                ckpt.c_str(), mpath.c_str());
  }
  return 0;
}

int cmd_curriculum(const CommonArgs& args) {
  ExperimentConfig cfg = resolve(args);
  if (args.steps > 0) cfg.lse.max_env_steps = args.steps;
  for (std::uint64_t seed : cfg.seeds) {
    CurriculumResult res = run_curriculum(cfg, seed);
    for (const auto& s : res.stages) {
      std::printf("seed %llu stage %-10s %s env_steps=%ld best_success=%.2f -> %s\n",
                  static_cast<unsigned long long>(seed), s.name.c_str(),
                  s.converged ? "converged" : "NOT CONVERGED", s.env_steps, s.best_success,
                  s.checkpoint.c_str());
    }
    std::printf("seed %llu: %s; metrics %s\n", static_cast<unsigned long long>(seed),
                res.degraded ? "DEGRADED (some stage missed its target)" : "complete",
                res.metrics_file.c_str());
  }
  return 0;
}

int cmd_fine_tune(const CommonArgs& args, const std::string& geometry) {
  ExperimentConfig cfg = resolve(args);
  if (args.steps > 0) cfg.fine_tune.max_env_steps = args.steps;
  for (std::uint64_t seed : cfg.seeds) {
    FineTuneResult res = fine_tune_retract(cfg, geometry, seed);
    std::printf("seed %llu: %s after %ld env steps; tuned checkpoint %s; metrics %s\n",
                static_cast<unsigned long long>(seed),
                res.train.converged ? "converged" : "stopped at budget", res.train.env_steps,
                res.checkpoint.c_str(), res.metrics_file.c_str());
  }
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint,
                 const std::string& geometry_arg, int episodes) {
  ExperimentConfig cfg = resolve(args);
  const std::string geometry = geometry_arg.empty() ? cfg.geometry : geometry_arg;
  const ObjectGeometry geom = geometry_from_name(geometry);
  CheckpointReader reader(checkpoint);
  const std::string role = reader.str("role");
  const std::uint64_t seed = cfg.seeds.front();
  Rng rng(seed);
  if (role == "hlc") {
    HlcCheckpoint hlc = load_hlc_checkpoint(checkpoint);
    std::array<SubtaskPolicy, 3> experts = load_expert_policies(cfg, hlc.seed);
    HlcEvalResult r = evaluate_hlc(hlc.params, experts, cfg.env, geom, episodes, rng);
    std::printf("hlc on %s: success=%.3f sequence_accuracy=%.3f over %d episodes\n",
                geometry.c_str(), r.success_rate, r.sequence_accuracy, episodes);
    return 0;
  }
  if (role == "end_to_end") {
    AgentCheckpoint ck = load_agent_checkpoint(checkpoint);
    const double r = evaluate_end_to_end(ck.agent, cfg.env, geom, episodes, rng);
    std::printf("end_to_end on %s: success=%.3f over %d episodes\n", geometry.c_str(), r,
                episodes);
    return 0;
  }
  if (role.rfind("bc_", 0) == 0) {
    const Subtask st = subtask_from_name(role.substr(3));
    SubtaskPolicy policy = load_bc_policy(checkpoint);
    const double r = evaluate_lse(policy, st, cfg.env, geom, episodes, rng);
    std::printf("%s on %s: composite success=%.3f over %d episodes\n", role.c_str(),
                geometry.c_str(), r, episodes);
    return 0;
  }
  const Subtask st = subtask_from_name(role);
  SubtaskPolicy policy = load_policy(checkpoint);
  const double r = evaluate_lse(policy, st, cfg.env, geom, episodes, rng);
  std::printf("%s expert on %s: composite success=%.3f over %d episodes\n", role.c_str(),
              geometry.c_str(), r, episodes);
  return 0;
}

int cmd_activations(const CommonArgs& args, int episodes) {
  ExperimentConfig cfg = resolve(args);
  const ObjectGeometry geom = geometry_from_name(cfg.geometry);
  const std::uint64_t seed = cfg.seeds.front();
  fs::create_directories(cfg.out_dir);

  std::vector<LabeledPolicies> sets;
  {
    LabeledPolicies oracle;
    oracle.label = "oracle";
    oracle.windowed = make_oracle_policies(cfg.env, geom);
    sets.push_back(std::move(oracle));
  }
  bool have_lse = true;
  for (Subtask st : kAllSubtasks) {
    have_lse = have_lse && fs::exists(lse_checkpoint_path(cfg, st, seed));
  }
  if (have_lse) {
    LabeledPolicies lse;
    lse.label = "lse";
    for (Subtask st : kAllSubtasks) {
      lse.windowed[static_cast<int>(st)] = load_policy(lse_checkpoint_path(cfg, st, seed));
    }
    sets.push_back(std::move(lse));
  } else {
    std::printf("note: expert checkpoints incomplete for seed %llu, skipping lse rows\n",
                static_cast<unsigned long long>(seed));
  }
  if (fs::exists(e2e_checkpoint_path(cfg, seed))) {
    LabeledPolicies e2e;
    e2e.label = "e2e";
    e2e.flat = load_policy(e2e_checkpoint_path(cfg, seed));
    sets.push_back(std::move(e2e));
  } else {
    std::printf("note: no end-to-end checkpoint for seed %llu, skipping e2e rows\n",
                static_cast<unsigned long long>(seed));
  }

  std::vector<ActivationRow> rows = activation_dump(cfg.env, geom, sets, episodes, seed);
  const std::string path =
      cfg.out_dir + "/activations_seed" + std::to_string(seed) + ".csv";
  write_activation_csv(path, rows);
  std::printf("%zu rows (%zu policy sets x %d episodes x %d steps) -> %s\n", rows.size(),
              sets.size(), episodes, cfg.env.horizon, path.c_str());
  for (const auto& set : sets) {
    if (set.label == "oracle") continue;
    const auto d = mean_action_distance(rows, set.label, "oracle");
    std::printf("mean action L2 to oracle, %s: approach=%.3f manipulate=%.3f retract=%.3f\n",
                set.label.c_str(), d[0], d[1], d[2]);
  }
  if (have_lse) {
    std::printf("lse manipulate mean translation magnitude: %.3f\n",
                mean_translation_magnitude(rows, "lse", Subtask::kManipulate));
  }
  return 0;
}

int cmd_report(const CommonArgs& args, std::vector<std::string> files) {
  ExperimentConfig cfg = resolve(args);
  if (files.empty()) {
    if (fs::is_directory(cfg.out_dir)) {
      for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("metrics_", 0) == 0 && entry.path().extension() == ".csv") {
          files.push_back(entry.path().string());
        }
      }
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) {
    throw ConfigError("report: no metrics files given and none found in " + cfg.out_dir);
  }
  ReportOptions opts;
  opts.threshold = cfg.success_threshold;
  std::fputs(compare_report(files, opts).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical pick-and-place: subtask experts, choreographer, baselines"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string subtask = "approach";
  std::string geometry;
  std::string checkpoint;
  std::string demos_in, demos_out;
  std::vector<std::string> files;
  int episodes = 100;

  CLI::App* t_lse = app.add_subcommand("train-lse", "train one subtask expert with DDPG+HER");
  t_lse->add_option("--subtask", subtask, "approach | manipulate | retract")->required();
  add_common(t_lse, args);

  CLI::App* t_hlc = app.add_subcommand(
      "train-hlc", "train the choreographer over saved subtask experts");
  add_common(t_hlc, args);

  CLI::App* t_e2e = app.add_subcommand("train-e2e", "train the flat DDPG+HER baseline");
  add_common(t_e2e, args);

  CLI::App* t_bc = app.add_subcommand(
      "train-bc", "train the behavior cloning baseline for one subtask");
  t_bc->add_option("--subtask", subtask, "approach | manipulate | retract")->required();
  t_bc->add_option("--load-demos", demos_in, "reuse a demonstration CSV instead of collecting");
  t_bc->add_option("--save-demos", demos_out, "write the collected demonstrations to CSV");
  add_common(t_bc, args);

  CLI::App* t_cur = app.add_subcommand(
      "curriculum", "experts then choreographer, sequentially, one metrics file per seed");
  add_common(t_cur, args);

  CLI::App* t_ft = app.add_subcommand(
      "fine-tune", "continue the saved retract expert on a new object geometry");
  t_ft->add_option("--geometry", geometry, "thin_cylinder | small_box | block")->required();
  add_common(t_ft, args);

  CLI::App* t_eval = app.add_subcommand("evaluate", "evaluate a saved checkpoint");
  t_eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  t_eval->add_option("--geometry", geometry, "object geometry to evaluate on");
  t_eval->add_option("--episodes", episodes, "evaluation episodes");
  add_common(t_eval, args);

  CLI::App* t_act = app.add_subcommand(
      "activations", "dump per-step actions of oracle, experts and baseline");
  t_act->add_option("--episodes", episodes, "episodes per policy set")->default_val(10);
  add_common(t_act, args);

  CLI::App* t_rep = app.add_subcommand(
      "report", "steps-to-threshold table from metrics files");
  t_rep->add_option("files", files, "metrics CSV files (default: all in the artifact dir)");
  add_common(t_rep, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (t_lse->parsed()) return cmd_train_lse(args, subtask);
    if (t_hlc->parsed()) return cmd_train_hlc(args);
    if (t_e2e->parsed()) return cmd_train_e2e(args);
    if (t_bc->parsed()) return cmd_train_bc(args, subtask, demos_in, demos_out);
    if (t_cur->parsed()) return cmd_curriculum(args);
    if (t_ft->parsed()) return cmd_fine_tune(args, geometry);
    if (t_eval->parsed()) return cmd_evaluate(args, checkpoint, geometry, episodes);
    if (t_act->parsed()) return cmd_activations(args, episodes);
    if (t_rep->parsed()) return cmd_report(args, files);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
