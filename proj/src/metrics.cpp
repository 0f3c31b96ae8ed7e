#include "choreo/metrics.hpp"

#include <charconv>
#include <filesystem>
#include <sstream>

#include "choreo/common.hpp"

namespace choreo {

void append_csv_double(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, res.ptr);
}

const char* MetricsWriter::header() {
  return "method,subtask,env_steps,success_rate,wall_clock_seconds,seed,sequence_accuracy";
}

MetricsWriter::MetricsWriter(const std::string& path, bool record_wall_clock)
    : path_(path), record_wall_clock_(record_wall_clock) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) ||
                     std::filesystem::file_size(path, ec) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw ConfigError("MetricsWriter: cannot open " + path);
  if (fresh) out_ << header() << "\n";
}

void MetricsWriter::append(const MetricsRow& row) {
  require(!row.method.empty() && !row.subtask.empty(),
          "MetricsWriter: method and subtask must be set");
  std::string line = row.method + ',' + row.subtask + ',';
  line += std::to_string(row.env_steps);
  line += ',';
  append_csv_double(line, row.success_rate);
  line += ',';
  append_csv_double(line, record_wall_clock_ ? row.wall_clock_seconds : 0.0);
  line += ',';
  line += std::to_string(row.seed);
  line += ',';
  if (row.sequence_accuracy >= 0.0) append_csv_double(line, row.sequence_accuracy);
  out_ << line << "\n";
  out_.flush();
  if (!out_) throw ConfigError("MetricsWriter: write failed on " + path_);
}

namespace {

double parse_double(const std::string& field, const std::string& path) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ConfigError("load_metrics: bad number '" + field + "' in " + path);
  }
  return v;
}

}  // namespace

std::vector<MetricsRow> load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_metrics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != MetricsWriter::header()) {
    throw ConfigError("load_metrics: bad header in " + path);
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 7) {
      throw ConfigError("load_metrics: expected 7 fields, got " +
                        std::to_string(fields.size()) + " in " + path);
    }
    MetricsRow r;
    r.method = fields[0];
    r.subtask = fields[1];
    r.env_steps = static_cast<long>(parse_double(fields[2], path));
    r.success_rate = parse_double(fields[3], path);
    r.wall_clock_seconds = parse_double(fields[4], path);
    r.seed = static_cast<std::uint64_t>(parse_double(fields[5], path));
    r.sequence_accuracy = fields[6].empty() ? -1.0 : parse_double(fields[6], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

long first_crossing(const std::vector<MetricsRow>& rows, const std::string& method,
                    const std::string& subtask, std::uint64_t seed, double threshold) {
  for (const auto& r : rows) {
    if (r.method == method && r.subtask == subtask && r.seed == seed &&
        r.success_rate >= threshold) {
      return r.env_steps;
    }
  }
  return -1;
}

TrajectoryRow make_trajectory_row(int step, const EnvState& s, const Vec3& achieved,
                                  double reward) {
  TrajectoryRow r;
  r.step = step;
  r.gripper = s.gripper;
  r.aperture = s.aperture;
  r.object = s.object;
  r.attached = s.attached;
  r.achieved = achieved;
  r.reward = reward;
  return r;
}

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("write_trajectory_csv: cannot open " + path);
  out << "step,pg_x,pg_y,pg_z,w,po_x,po_y,po_z,attached,ag_x,ag_y,ag_z,reward\n";
  std::string line;
  for (const auto& r : rows) {
    line = std::to_string(r.step);
    line += ',';
    for (int i = 0; i < 3; ++i) {
      append_csv_double(line, r.gripper[i]);
      line += ',';
    }
    append_csv_double(line, r.aperture);
    line += ',';
    for (int i = 0; i < 3; ++i) {
      append_csv_double(line, r.object[i]);
      line += ',';
    }
    line += r.attached ? '1' : '0';
    line += ',';
    for (int i = 0; i < 3; ++i) {
      append_csv_double(line, r.achieved[i]);
      line += ',';
    }
    append_csv_double(line, r.reward);
    out << line << "\n";
  }
  if (!out) throw ConfigError("write_trajectory_csv: write failed on " + path);
}

}  // namespace choreo
