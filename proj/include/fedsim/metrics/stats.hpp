#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fedsim {

// Nearest-rank q-quantile: the ceil(q*n)-th smallest sample (1-based).
// Throws EmptySamples on empty input and ConfigError for q outside (0, 1].
double percentile(std::span<const double> samples, double q);

double median(std::span<const double> samples);
double population_stddev(std::span<const double> samples);

struct LatencySummary {
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double stddev_ms = 0.0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
  std::uint64_t n = 0;
  bool operator==(const LatencySummary&) const = default;
};

std::optional<LatencySummary> summarize_latencies(std::span<const double> samples);

struct QoSVerdict {
  double threshold_ms = 15.0;
  std::uint64_t violations = 0;
  bool pass = false;
  // Set when there were no samples to judge; pass is then false.
  bool no_data = false;
  bool operator==(const QoSVerdict&) const = default;
};

QoSVerdict evaluate_qos(std::span<const double> latencies_ms, double threshold_ms = 15.0);

}  // namespace fedsim
