#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/metrics/config.hpp"
#include "fedsim/metrics/report.hpp"

namespace fedsim {

struct RunResult {
  RunReport report;
  // Every consumed frame, warm-up included, in consumption order.
  std::vector<LatencySample> samples;
  // Latencies that entered the statistics.
  std::vector<double> analysed_ms;
  std::vector<double> cpu_average_series;
  std::vector<double> mem_average_series;
  std::map<std::string, std::vector<double>> cpu_series;
  std::map<std::string, std::vector<double>> mem_series;
};

// Provisions, peers, offloads, streams for duration_min and reports. Any
// failure to realise the config surfaces as ConfigError naming the field.
RunResult run_scenario(const ScenarioConfig& config);

// Runs seeds config.seed .. config.seed + repeat - 1 as isolated worlds on up
// to `threads` workers (0 = hardware concurrency) and pools the results.
// Element 0 is the merged result; elements 1..repeat are the individual runs.
std::vector<RunResult> run_repeated(const ScenarioConfig& config, unsigned repeat, unsigned threads = 0);

RunResult merge_runs(const std::vector<RunResult>& runs);

}  // namespace fedsim
