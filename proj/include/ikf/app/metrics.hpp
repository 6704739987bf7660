#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ikf::app {

struct MetricsRow {
  std::string arm;
  std::uint64_t seed = 0;
  std::optional<double> success_rate;
  std::optional<double> mean_steps;
  std::optional<double> accuracy;
  std::optional<double> runtime;
};

struct Aggregate {
  std::string arm;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

struct MetricsRecord {
  std::string experiment;
  std::vector<MetricsRow> rows;

  // One entry per (arm, metric) with at least one value, arms in first-seen order.
  std::vector<Aggregate> aggregates() const;
  std::optional<Aggregate> aggregate(const std::string& arm, const std::string& metric) const;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"success_rate", "mean_steps", "accuracy", "runtime"};
  return names;
}

// "# experiment,<name>" and "# aggregate,<arm>,<metric>,<mean>,<std>,<n>"
// header lines, then "arm,seed,success_rate,mean_steps,accuracy,runtime"
// with empty cells for absent values.
void write_metrics_csv(const MetricsRecord& record, const std::filesystem::path& path);
MetricsRecord read_metrics_csv(const std::filesystem::path& path);
// Header aggregates of a metrics file, as written.
std::vector<Aggregate> read_metrics_aggregates(const std::filesystem::path& path);

}  // namespace ikf::app
