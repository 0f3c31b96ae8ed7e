#pragma once

#include <array>
#include <string>
#include <vector>

#include "choreo/bc.hpp"
#include "choreo/ddpg.hpp"
#include "choreo/hlc.hpp"
#include "choreo/metrics.hpp"

namespace choreo {

// Everything an experiment command needs, with defaults that reproduce the
// reference desk-scale experiment when no config file is given.
struct ExperimentConfig {
  EnvConfig env;
  std::string geometry = "block";
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "runs";
  double success_threshold = 0.9;  // stage crossing level for reports
  bool record_wall_clock = false;  // write real wall times into metrics files
  LseTrainConfig lse;
  LseTrainConfig e2e;        // flat baseline, bigger budget
  LseTrainConfig fine_tune;  // continuation budget for new geometries
  HlcTrainConfig hlc;
  BcTrainConfig bc;
  int bc_demo_episodes = 12000;

  ExperimentConfig();
};

// Reads a JSON config file. Every field is optional and falls back to the
// defaults above, so an empty object reproduces the reference experiment.
// Unknown keys are rejected.
ExperimentConfig load_experiment_config(const std::string& path);

// File layout inside cfg.out_dir.
std::string lse_checkpoint_path(const ExperimentConfig& cfg, Subtask st, std::uint64_t seed);
std::string bc_checkpoint_path(const ExperimentConfig& cfg, Subtask st, std::uint64_t seed);
std::string hlc_checkpoint_path(const ExperimentConfig& cfg, std::uint64_t seed);
std::string e2e_checkpoint_path(const ExperimentConfig& cfg, std::uint64_t seed);
std::string tuned_checkpoint_path(const ExperimentConfig& cfg, const std::string& geometry,
                                  std::uint64_t seed);
std::string metrics_path(const ExperimentConfig& cfg, std::uint64_t seed);

// Loads the three expert policies saved under cfg.out_dir for one seed.
// Throws ConfigError naming the first missing checkpoint file.
std::array<SubtaskPolicy, 3> load_expert_policies(const ExperimentConfig& cfg,
                                                  std::uint64_t seed);

struct StageOutcome {
  std::string name;  // approach | manipulate | retract | hlc
  bool converged = false;
  long env_steps = 0;
  double best_success = 0.0;
  std::string checkpoint;
};

struct CurriculumResult {
  std::vector<StageOutcome> stages;
  bool degraded = false;  // some stage missed its stop target
  std::string metrics_file;
};

// approach -> manipulate -> retract -> choreographer, sequentially, for one
// seed. Every stage starts from Rng(seed), so its curve matches the
// standalone command with the same seed, and all curves land in one metrics
// file (recreated at the start). Expert checkpoints are written at every
// evaluation improvement; the choreographer stage reads them back from disk
// and fails fast if one is missing. A stage that misses its stop target
// marks the run degraded and the pipeline continues with its best snapshot.
CurriculumResult run_curriculum(const ExperimentConfig& cfg, std::uint64_t seed);

struct FineTuneResult {
  LseTrainResult train;
  std::string checkpoint;
  std::string metrics_file;
};

// Continues the saved block-trained retract expert on a new geometry.
// Writes exactly one checkpoint file (the tuned retract); the approach,
// manipulate, and base retract files are not touched.
FineTuneResult fine_tune_retract(const ExperimentConfig& cfg, const std::string& geometry,
                                 std::uint64_t seed);

// One labeled action source for activation dumps: either three per-window
// experts, or one flat policy that acts on the episode goal all the way.
struct LabeledPolicies {
  std::string label;
  std::array<SubtaskPolicy, 3> windowed;  // used when flat is empty
  SubtaskPolicy flat;
};

struct ActivationRow {
  std::string policy_label;
  int episode = 0;
  int step = 0;
  std::string subtask_label;
  Action action{0.0, 0.0, 0.0, 0.0};
};

// Runs each policy set through the same seeded initial conditions for
// `episodes` full-length canonical episodes and records every action,
// labeled by the active window. Row count is sets * episodes * horizon.
std::vector<ActivationRow> activation_dump(const EnvConfig& env_cfg, ObjectGeometry geometry,
                                           const std::vector<LabeledPolicies>& sets,
                                           int episodes, std::uint64_t seed);

void write_activation_csv(const std::string& path, const std::vector<ActivationRow>& rows);

// Mean L2 distance between two labels' actions at matched episode and step
// indices, split by subtask window.
std::array<double, 3> mean_action_distance(const std::vector<ActivationRow>& rows,
                                           const std::string& label_a,
                                           const std::string& label_b);

// Mean translation norm of one label's actions within one subtask window.
double mean_translation_magnitude(const std::vector<ActivationRow>& rows,
                                  const std::string& label, Subtask st);

struct ReportOptions {
  double threshold = 0.9;
};

// Text table of env steps to the success threshold per method and stage,
// assembled from metrics files (medians across the seeds present), plus
// published Fetch-benchmark results as fixed reference rows.
std::string compare_report(const std::vector<std::string>& metrics_files,
                           const ReportOptions& opts = {});

}  // namespace choreo
