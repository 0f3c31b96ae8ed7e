#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "choreo/checkpoint.hpp"
#include "choreo/experiment.hpp"

using namespace choreo;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("choreo_harness_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

// Small enough to train in well under a second.
ExperimentConfig tiny_config(const std::string& dir) {
  ExperimentConfig cfg;
  cfg.out_dir = dir;
  cfg.lse.epoch_steps = 300;
  cfg.lse.max_env_steps = 600;
  cfg.lse.eval_episodes = 3;
  cfg.lse.batches_per_cadence = 2;
  cfg.fine_tune = cfg.lse;
  cfg.e2e = cfg.lse;
  cfg.hlc.max_updates = 2;
  cfg.hlc.eval_every = 1;
  cfg.hlc.eval_episodes = 3;
  cfg.hlc.gae.workers = 1;
  cfg.hlc.gae.rollouts_per_update = 2;
  return cfg;
}

}  // namespace

TEST_CASE("metrics rows survive a write and load round trip") {
  const std::string dir = temp_dir("metrics_rt");
  const std::string path = dir + "/m.csv";
  {
    MetricsWriter w(path);
    w.append({"ddpg_lse", "approach", 15000, 0.43, 12.5, 3});
    w.append({"hlc", "hlc", 96000, 0.97, 80.25, 3, 0.915});
  }
  auto rows = load_metrics(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == "ddpg_lse");
  CHECK(rows[0].subtask == "approach");
  CHECK(rows[0].env_steps == 15000);
  CHECK(rows[0].success_rate == 0.43);
  CHECK(rows[0].wall_clock_seconds == 0.0);  // zeroed by default
  CHECK(rows[0].seed == 3);
  CHECK(rows[0].sequence_accuracy == -1.0);
  CHECK(rows[1].method == "hlc");
  CHECK(rows[1].sequence_accuracy == 0.915);
  CHECK(rows[1].wall_clock_seconds == 0.0);

  SUBCASE("wall clock is kept when asked for") {
    const std::string path2 = dir + "/m2.csv";
    MetricsWriter w(path2, true);
    w.append({"ddpg_lse", "retract", 30000, 1.0, 55.5, 1});
    auto kept = load_metrics(path2);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].wall_clock_seconds == 55.5);
  }
}

TEST_CASE("metrics writer appends across reopens without repeating the header") {
  const std::string dir = temp_dir("metrics_append");
  const std::string path = dir + "/m.csv";
  {
    MetricsWriter w(path);
    w.append({"ddpg_lse", "approach", 100, 0.1, 0.0, 1});
  }
  {
    MetricsWriter w(path);
    w.append({"ddpg_lse", "approach", 200, 0.2, 0.0, 1});
  }
  CHECK(load_metrics(path).size() == 2);
  std::istringstream lines(slurp(path));
  std::string line;
  int headers = 0;
  while (std::getline(lines, line)) {
    if (line == MetricsWriter::header()) headers += 1;
  }
  CHECK(headers == 1);
}

TEST_CASE("load_metrics rejects malformed files") {
  const std::string dir = temp_dir("metrics_bad");
  spit(dir + "/h.csv", "wrong,header\n");
  CHECK_THROWS_AS(load_metrics(dir + "/h.csv"), ConfigError);
  spit(dir + "/f.csv", std::string(MetricsWriter::header()) + "\na,b,1,2\n");
  CHECK_THROWS_AS(load_metrics(dir + "/f.csv"), ConfigError);
  spit(dir + "/n.csv", std::string(MetricsWriter::header()) + "\nm,s,x,0.5,0,1,\n");
  CHECK_THROWS_AS(load_metrics(dir + "/n.csv"), ConfigError);
  CHECK_THROWS_AS(load_metrics(dir + "/absent.csv"), ConfigError);
}

TEST_CASE("first_crossing returns the earliest row at the threshold") {
  std::vector<MetricsRow> rows;
  rows.push_back({"ddpg_lse", "approach", 15000, 0.2, 0.0, 1});
  rows.push_back({"ddpg_lse", "approach", 30000, 0.92, 0.0, 1});
  rows.push_back({"ddpg_lse", "approach", 45000, 0.95, 0.0, 1});
  rows.push_back({"ddpg_lse", "approach", 15000, 0.99, 0.0, 2});
  rows.push_back({"bc_lse", "approach", 5000, 1.0, 0.0, 1});
  CHECK(first_crossing(rows, "ddpg_lse", "approach", 1, 0.9) == 30000);
  CHECK(first_crossing(rows, "ddpg_lse", "approach", 2, 0.9) == 15000);
  CHECK(first_crossing(rows, "bc_lse", "approach", 1, 0.9) == 5000);
  CHECK(first_crossing(rows, "ddpg_lse", "approach", 3, 0.9) == -1);
  CHECK(first_crossing(rows, "ddpg_lse", "retract", 1, 0.9) == -1);
  CHECK(first_crossing(rows, "ddpg_lse", "approach", 1, 0.94) == 45000);
  CHECK(first_crossing(rows, "ddpg_lse", "approach", 1, 0.97) == -1);
}

TEST_CASE("trajectory csv uses the pinned header and one line per step") {
  const std::string dir = temp_dir("traj");
  EnvState s;
  s.gripper = Vec3{0.5, 0.25, 0.125};
  s.aperture = 0.0375;
  s.object = Vec3{0.75, 0.5, 0.0};
  s.attached = true;
  std::vector<TrajectoryRow> rows;
  rows.push_back(make_trajectory_row(0, s, Vec3{0.75, 0.5, 0.0}, -1.0));
  s.attached = false;
  rows.push_back(make_trajectory_row(1, s, Vec3{0.1, 0.2, 0.3}, 0.0));
  const std::string path = dir + "/t.csv";
  write_trajectory_csv(path, rows);

  std::istringstream lines(slurp(path));
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "step,pg_x,pg_y,pg_z,w,po_x,po_y,po_z,attached,ag_x,ag_y,ag_z,reward");
  REQUIRE(std::getline(lines, line));
  CHECK(line == "0,0.5,0.25,0.125,0.0375,0.75,0.5,0,1,0.75,0.5,0,-1");
  REQUIRE(std::getline(lines, line));
  CHECK(line == "1,0.5,0.25,0.125,0.0375,0.75,0.5,0,0,0.1,0.2,0.3,0");
  CHECK_FALSE(std::getline(lines, line));
}

TEST_CASE("experiment config defaults describe the reference experiment") {
  ExperimentConfig cfg;
  CHECK(cfg.geometry == "block");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.success_threshold == 0.9);
  CHECK_FALSE(cfg.record_wall_clock);
  CHECK(cfg.lse.max_env_steps == 150000);
  CHECK(cfg.e2e.max_env_steps == 500000);
  CHECK(cfg.fine_tune.max_env_steps == 50000);
  CHECK(cfg.hlc.gae.workers == 4);
  CHECK(cfg.bc_demo_episodes == 12000);
}

TEST_CASE("config file loading") {
  const std::string dir = temp_dir("config");

  SUBCASE("empty path and empty object both give the defaults") {
    const ExperimentConfig def = load_experiment_config("");
    spit(dir + "/empty.json", "{}");
    const ExperimentConfig cfg = load_experiment_config(dir + "/empty.json");
    CHECK(cfg.geometry == def.geometry);
    CHECK(cfg.seeds == def.seeds);
    CHECK(cfg.lse.max_env_steps == def.lse.max_env_steps);
    CHECK(cfg.e2e.max_env_steps == def.e2e.max_env_steps);
    CHECK(cfg.hlc.max_updates == def.hlc.max_updates);
    CHECK(cfg.bc.epochs_per_round == def.bc.epochs_per_round);
  }

  SUBCASE("given fields override, everything else stays default") {
    spit(dir + "/some.json", R"({
      "seeds": [7],
      "geometry": "thin_cylinder",
      "out_dir": "elsewhere",
      "lse": {"max_env_steps": 9000, "ddpg": {"lr": 0.01, "hidden": [32, 32]}},
      "hlc": {"workers": 2},
      "bc": {"demo_episodes": 55}
    })");
    const ExperimentConfig cfg = load_experiment_config(dir + "/some.json");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{7});
    CHECK(cfg.geometry == "thin_cylinder");
    CHECK(cfg.out_dir == "elsewhere");
    CHECK(cfg.lse.max_env_steps == 9000);
    CHECK(cfg.lse.ddpg.adam.lr == 0.01);
    CHECK(cfg.lse.ddpg.hidden == std::vector<int>{32, 32});
    CHECK(cfg.lse.epoch_steps == 15000);
    CHECK(cfg.hlc.gae.workers == 2);
    CHECK(cfg.bc_demo_episodes == 55);
    CHECK(cfg.e2e.max_env_steps == 500000);
  }

  SUBCASE("unknown keys are rejected wherever they appear") {
    spit(dir + "/top.json", R"({"speed": 3})");
    CHECK_THROWS_AS(load_experiment_config(dir + "/top.json"), ConfigError);
    spit(dir + "/nested.json", R"({"lse": {"max_envsteps": 5}})");
    CHECK_THROWS_AS(load_experiment_config(dir + "/nested.json"), ConfigError);
    spit(dir + "/deep.json", R"({"lse": {"ddpg": {"learning_rate": 0.1}}})");
    CHECK_THROWS_AS(load_experiment_config(dir + "/deep.json"), ConfigError);
  }

  SUBCASE("invalid values are rejected") {
    spit(dir + "/geom.json", R"({"geometry": "sphere"})");
    CHECK_THROWS_AS(load_experiment_config(dir + "/geom.json"), ConfigError);
    spit(dir + "/seeds.json", R"({"seeds": []})");
    CHECK_THROWS_AS(load_experiment_config(dir + "/seeds.json"), ConfigError);
    spit(dir + "/type.json", R"({"lse": {"max_env_steps": "many"}})");
    CHECK_THROWS_AS(load_experiment_config(dir + "/type.json"), ConfigError);
    spit(dir + "/syntax.json", "{not json");
    CHECK_THROWS_AS(load_experiment_config(dir + "/syntax.json"), ConfigError);
    CHECK_THROWS_AS(load_experiment_config(dir + "/missing.json"), ConfigError);
  }
}

TEST_CASE("artifact paths are deterministic and seed scoped") {
  ExperimentConfig cfg;
  cfg.out_dir = "runs";
  CHECK(lse_checkpoint_path(cfg, Subtask::kApproach, 3) == "runs/lse_approach_seed3.ckpt");
  CHECK(bc_checkpoint_path(cfg, Subtask::kRetract, 1) == "runs/bc_retract_seed1.ckpt");
  CHECK(hlc_checkpoint_path(cfg, 2) == "runs/hlc_seed2.ckpt");
  CHECK(e2e_checkpoint_path(cfg, 9) == "runs/e2e_seed9.ckpt");
  CHECK(tuned_checkpoint_path(cfg, "small_box", 1) == "runs/lse_retract_small_box_seed1.ckpt");
  CHECK(metrics_path(cfg, 4) == "runs/metrics_seed4.csv");
}

TEST_CASE("missing expert checkpoints are reported by name") {
  const std::string dir = temp_dir("missing");
  ExperimentConfig cfg = tiny_config(dir);
  Rng rng(11);
  DdpgConfig small;
  small.hidden = {16};
  DdpgAgent agent(KinematicEnv::kObsDim, small, rng);
  for (Subtask st : {Subtask::kApproach, Subtask::kManipulate}) {
    save_agent_checkpoint(lse_checkpoint_path(cfg, st, 1), agent, subtask_name(st), 1, 0);
  }
  try {
    load_expert_policies(cfg, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("lse_retract_seed1.ckpt") != std::string::npos);
  }
  save_agent_checkpoint(lse_checkpoint_path(cfg, Subtask::kRetract, 1), agent, "retract", 1,
                        0);
  auto experts = load_expert_policies(cfg, 1);
  for (const auto& p : experts) CHECK(static_cast<bool>(p));
}

TEST_CASE("tiny curriculum writes every artifact and is byte reproducible") {
  const std::string dir = temp_dir("curriculum");
  ExperimentConfig cfg = tiny_config(dir);
  CurriculumResult res = run_curriculum(cfg, 4);

  REQUIRE(res.stages.size() == 4);
  CHECK(res.stages[0].name == "approach");
  CHECK(res.stages[1].name == "manipulate");
  CHECK(res.stages[2].name == "retract");
  CHECK(res.stages[3].name == "hlc");
  CHECK(res.degraded);  // nothing converges on these budgets
  for (const auto& s : res.stages) CHECK(fs::exists(s.checkpoint));

  auto rows = load_metrics(res.metrics_file);
  int lse_rows = 0, hlc_rows = 0;
  for (const auto& r : rows) {
    if (r.method == "ddpg_lse") {
      lse_rows += 1;
      CHECK(r.seed == 4);
      CHECK(r.sequence_accuracy == -1.0);
      CHECK(r.wall_clock_seconds == 0.0);
    }
    if (r.method == "hlc") {
      hlc_rows += 1;
      CHECK(r.subtask == "hlc");
      CHECK(r.sequence_accuracy >= 0.0);
    }
  }
  CHECK(lse_rows == 6);  // three experts, two evaluations each
  CHECK(hlc_rows >= 1);

  const std::string first = slurp(res.metrics_file);
  const std::string approach_ckpt = slurp(lse_checkpoint_path(cfg, Subtask::kApproach, 4));
  CurriculumResult again = run_curriculum(cfg, 4);
  CHECK(slurp(again.metrics_file) == first);
  CHECK(slurp(lse_checkpoint_path(cfg, Subtask::kApproach, 4)) == approach_ckpt);
}

TEST_CASE("fine tuning touches exactly the tuned checkpoint") {
  const std::string dir = temp_dir("finetune");
  ExperimentConfig cfg = tiny_config(dir);

  SUBCASE("missing base checkpoint fails fast") {
    CHECK_THROWS_AS(fine_tune_retract(cfg, "thin_cylinder", 1), ConfigError);
  }

  SUBCASE("wrong role at the base path fails fast") {
    Rng rng(5);
    DdpgConfig small;
    small.hidden = {16};
    DdpgAgent agent(KinematicEnv::kObsDim, small, rng);
    save_agent_checkpoint(lse_checkpoint_path(cfg, Subtask::kRetract, 1), agent, "approach",
                          1, 0);
    CHECK_THROWS_AS(fine_tune_retract(cfg, "thin_cylinder", 1), ConfigError);
  }

  SUBCASE("frozen experts stay byte identical") {
    Rng rng(5);
    DdpgConfig small;
    small.hidden = {16, 16};
    fill_input_normalization(small, cfg.env);
    for (Subtask st : kAllSubtasks) {
      DdpgAgent agent(KinematicEnv::kObsDim, small, rng);
      save_agent_checkpoint(lse_checkpoint_path(cfg, st, 1), agent, subtask_name(st), 1, 0);
    }
    const std::string approach_before = slurp(lse_checkpoint_path(cfg, Subtask::kApproach, 1));
    const std::string manipulate_before =
        slurp(lse_checkpoint_path(cfg, Subtask::kManipulate, 1));
    const std::string retract_before = slurp(lse_checkpoint_path(cfg, Subtask::kRetract, 1));

    FineTuneResult res = fine_tune_retract(cfg, "thin_cylinder", 1);
    CHECK(res.checkpoint == tuned_checkpoint_path(cfg, "thin_cylinder", 1));
    CHECK(fs::exists(res.checkpoint));
    CHECK(fs::exists(res.metrics_file));

    CHECK(slurp(lse_checkpoint_path(cfg, Subtask::kApproach, 1)) == approach_before);
    CHECK(slurp(lse_checkpoint_path(cfg, Subtask::kManipulate, 1)) == manipulate_before);
    CHECK(slurp(lse_checkpoint_path(cfg, Subtask::kRetract, 1)) == retract_before);

    auto rows = load_metrics(res.metrics_file);
    REQUIRE(!rows.empty());
    for (const auto& r : rows) {
      CHECK(r.method == "ddpg_lse_ft");
      CHECK(r.subtask == "retract");
    }

    AgentCheckpoint tuned = load_agent_checkpoint(res.checkpoint);
    CHECK(tuned.role == "retract");
  }
}

TEST_CASE("activation dump pins row count, alignment and window labels") {
  EnvConfig env;
  const auto oracles = make_oracle_policies(env, ObjectGeometry::kBlock);
  LabeledPolicies a;
  a.label = "oracle";
  a.windowed = oracles;
  LabeledPolicies b;
  b.label = "copy";
  b.windowed = oracles;
  const int episodes = 5;
  auto rows = activation_dump(env, ObjectGeometry::kBlock, {a, b}, episodes, 99);

  REQUIRE(rows.size() == 2u * episodes * env.horizon);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const int expected_step = static_cast<int>(i) % env.horizon;
    CHECK(r.step == expected_step);
    if (r.step < 15) CHECK(r.subtask_label == "approach");
    else if (r.step < 25) CHECK(r.subtask_label == "manipulate");
    else CHECK(r.subtask_label == "retract");
  }

  SUBCASE("identical policies on shared seeds act identically") {
    const auto d = mean_action_distance(rows, "oracle", "copy");
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 0.0);
    CHECK(d[2] == 0.0);
  }

  SUBCASE("oracle manipulate actions are mostly grip, little translation") {
    CHECK(mean_translation_magnitude(rows, "oracle", Subtask::kManipulate) < 0.2);
    CHECK(mean_translation_magnitude(rows, "oracle", Subtask::kApproach) > 0.2);
  }

  SUBCASE("csv dump has a header plus one line per row") {
    const std::string dir = temp_dir("actcsv");
    const std::string path = dir + "/a.csv";
    write_activation_csv(path, rows);
    std::istringstream lines(slurp(path));
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "policy_label,episode,step,subtask_label,a_x,a_y,a_z,a_grip");
    std::size_t body = 0;
    while (std::getline(lines, line)) body += 1;
    CHECK(body == rows.size());
  }

  SUBCASE("misuse is rejected") {
    CHECK_THROWS_AS(mean_action_distance(rows, "oracle", "absent"), ContractViolation);
    CHECK_THROWS_AS(mean_translation_magnitude(rows, "absent", Subtask::kApproach),
                    ContractViolation);
    LabeledPolicies broken;
    broken.label = "broken";
    CHECK_THROWS_AS(activation_dump(env, ObjectGeometry::kBlock, {broken}, 1, 1),
                    ConfigError);
    CHECK_THROWS_AS(activation_dump(env, ObjectGeometry::kBlock, {a}, 0, 1),
                    ContractViolation);
  }

  SUBCASE("a flat policy acts on the episode goal across all windows") {
    LabeledPolicies flat;
    flat.label = "flat";
    flat.flat = [](const Vec&, const Vec3& goal) {
      return Action{goal.x(), goal.y(), goal.z(), 1.0};
    };
    auto frows = activation_dump(env, ObjectGeometry::kBlock, {flat}, 2, 31);
    REQUIRE(frows.size() == 2u * env.horizon);
    for (std::size_t t = 1; t < frows.size(); ++t) {
      if (frows[t].episode == frows[t - 1].episode) {
        CHECK(frows[t].action == frows[t - 1].action);  // goal is fixed per episode
      }
    }
  }
}

TEST_CASE("compare report reads crossings, medians and gaps from metrics files") {
  const std::string dir = temp_dir("report");
  const std::string f1 = dir + "/m1.csv";
  {
    MetricsWriter w(f1);
    for (std::uint64_t seed : {1, 2, 3}) {
      // approach crossings 30000 / 45000 / 60000 -> median 45000
      const long cross = 15000 * static_cast<long>(seed + 1);
      for (long s = 15000; s <= 90000; s += 15000) {
        w.append({"ddpg_lse", "approach", s, s >= cross ? 1.0 : 0.1, 0.0, seed});
      }
      w.append({"ddpg_lse", "manipulate", 15000, 0.95, 0.0, seed});
      w.append({"ddpg_lse", "retract", 15000, 0.99, 0.0, seed});
      w.append({"hlc", "hlc", 20000, 0.96, 0.0, seed, 1.0});
    }
  }
  const std::string f2 = dir + "/m2.csv";
  {
    MetricsWriter w(f2);
    w.append({"ddpg_e2e", "e2e", 250000, 0.31, 0.0, 1});
    w.append({"ddpg_e2e", "e2e", 500000, 0.52, 0.0, 1});
  }

  const std::string report = compare_report({f1, f2});
  CHECK(report.find("DDPG+HER LSE") != std::string::npos);
  CHECK(report.find("45000") != std::string::npos);          // approach median
  CHECK(report.find("95000") != std::string::npos);          // total median
  CHECK(report.find("not reached") != std::string::npos);    // e2e never crosses
  CHECK(report.find("152k") != std::string::npos);           // reference rows present
  CHECK(report.find("316k") != std::string::npos);
  CHECK(report.find("1.4M") != std::string::npos);
  CHECK(report.find("~18 min") != std::string::npos);

  SUBCASE("threshold is honored") {
    ReportOptions opts;
    opts.threshold = 0.5;
    const std::string easier = compare_report({f1, f2}, opts);
    CHECK(easier.find("500000") != std::string::npos);  // e2e crosses 0.5 at the cap
  }

  SUBCASE("a method with no rows shows dashes, not misses") {
    const std::string only_e2e = compare_report({f2});
    const auto bc_line_at = only_e2e.find("BC LSE");
    REQUIRE(bc_line_at != std::string::npos);
    const auto line_end = only_e2e.find('\n', bc_line_at);
    const std::string bc_line = only_e2e.substr(bc_line_at, line_end - bc_line_at);
    CHECK(bc_line.find("not reached") == std::string::npos);
  }

  SUBCASE("wall clock sums surface in the time column") {
    const std::string f3 = dir + "/m3.csv";
    MetricsWriter w(f3, true);
    w.append({"ddpg_lse", "approach", 15000, 1.0, 120.0, 1});
    w.append({"ddpg_lse", "manipulate", 15000, 1.0, 240.0, 1});
    w.append({"ddpg_lse", "retract", 15000, 1.0, 240.0, 1});
    w.append({"hlc", "hlc", 9000, 1.0, 120.0, 1, 1.0});
    const std::string timed = compare_report({f3});
    CHECK(timed.find("12.0 min") != std::string::npos);
  }
}

TEST_CASE("a seeded training command writes a byte reproducible metrics file") {
  const std::string dir = temp_dir("repro");
  ExperimentConfig cfg = tiny_config(dir);
  auto run_once = [&](const std::string& path) {
    fs::remove(path);
    MetricsWriter metrics(path);
    Rng rng(6);
    TrainCallbacks cb;
    cb.on_eval = [&](const EvalPoint& p) {
      metrics.append({"ddpg_lse", "approach", p.env_steps, p.success_rate, p.wall_seconds, 6});
    };
    train_lse(cfg.env, ObjectGeometry::kBlock, Subtask::kApproach, cfg.lse, rng, cb);
  };
  run_once(dir + "/a.csv");
  run_once(dir + "/b.csv");
  const std::string a = slurp(dir + "/a.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(dir + "/b.csv"));
}
