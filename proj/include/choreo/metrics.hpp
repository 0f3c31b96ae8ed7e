#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "choreo/env.hpp"

namespace choreo {

// One point of a training curve, as persisted by every training command.
struct MetricsRow {
  std::string method;   // ddpg_lse | bc_lse | ddpg_e2e | hlc
  std::string subtask;  // approach | manipulate | retract | e2e | hlc
  long env_steps = 0;
  double success_rate = 0.0;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
  double sequence_accuracy = -1.0;  // negative leaves the column empty
};

// Append-only CSV writer for training curves. One fixed header covers every
// method; rows without a sequence accuracy leave that field empty. Wall clock
// values are written as 0 unless record_wall_clock is set, so a seeded rerun
// of a command produces a byte-identical file.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path, bool record_wall_clock = false);

  void append(const MetricsRow& row);
  const std::string& path() const { return path_; }

  static const char* header();

 private:
  std::string path_;
  std::ofstream out_;
  bool record_wall_clock_;
};

std::vector<MetricsRow> load_metrics(const std::string& path);

// First env_steps of the matching curve whose success rate reaches
// `threshold`, or -1 if it never does. Rows are scanned in file order.
long first_crossing(const std::vector<MetricsRow>& rows, const std::string& method,
                    const std::string& subtask, std::uint64_t seed, double threshold);

// One env step of an episode trace.
struct TrajectoryRow {
  int step = 0;
  Vec3 gripper{0.0, 0.0, 0.0};
  double aperture = 0.0;
  Vec3 object{0.0, 0.0, 0.0};
  bool attached = false;
  Vec3 achieved{0.0, 0.0, 0.0};
  double reward = 0.0;
};

TrajectoryRow make_trajectory_row(int step, const EnvState& s, const Vec3& achieved,
                                  double reward);

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows);

// Shortest round-trip decimal form, shared by the CSV writers.
void append_csv_double(std::string& line, double v);

}  // namespace choreo
