#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedsim/lifecycle/cluster.hpp"
#include "fedsim/metrics/stats.hpp"
#include "fedsim/stream/pipeline.hpp"

namespace fedsim {

struct FrameSummary {
  std::uint64_t generated = 0;
  std::uint64_t consumed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  // Consumed frames embedded during the warm-up window (not in latency.n).
  std::uint64_t warmup_excluded = 0;
  bool operator==(const FrameSummary&) const = default;
};

struct UsageSummary {
  // Median over sampling instants of the mean across clusters.
  double median_pct = 0.0;
  std::map<std::string, double> per_cluster_median_pct;
  bool operator==(const UsageSummary&) const = default;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::optional<LatencySummary> latency;
  double cpu_median_pct = 0.0;
  double mem_median_pct = 0.0;
  FrameSummary frames;
  std::uint64_t trace_digest = 0;
  bool operator==(const RunSummary&) const = default;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string exposure;
  // Absent when no frame was analysed.
  std::optional<LatencySummary> latency;
  UsageSummary cpu;
  UsageSummary mem;
  std::vector<ProvisionReport> provisioning;
  FrameSummary frames;
  QoSVerdict qos;
  // One entry per seed; a single run has exactly one.
  std::vector<RunSummary> runs;
  bool operator==(const RunReport&) const = default;
};

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

enum class ExportFormat { kSummaryDoc, kSamplesTable };

std::string export_summary(const RunReport& report);
RunReport parse_summary(std::string_view text);
// Header plus one row per sample, ordered by frame id.
std::string export_samples(std::vector<LatencySample> samples);

void write_file(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

}  // namespace fedsim
