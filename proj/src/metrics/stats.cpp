#include "fedsim/metrics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

double percentile(std::span<const double> samples, double q) {
  if (samples.empty()) fail(ErrorCode::kEmptySamples);
  if (!(q > 0.0 && q <= 1.0)) fail(ErrorCode::kConfigError, fmt::format("percentile q={}", q));
  const auto n = samples.size();
  // The epsilon absorbs representation error in q (0.9 * 10 must be rank 9).
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> work(samples.begin(), samples.end());
  auto nth = work.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

double median(std::span<const double> samples) { return percentile(samples, 0.5); }

double population_stddev(std::span<const double> samples) {
  if (samples.empty()) fail(ErrorCode::kEmptySamples);
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

std::optional<LatencySummary> summarize_latencies(std::span<const double> samples) {
  if (samples.empty()) return std::nullopt;
  LatencySummary s;
  s.n = samples.size();
  s.p50_ms = percentile(samples, 0.5);
  s.p90_ms = percentile(samples, 0.9);
  s.stddev_ms = population_stddev(samples);
  s.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(s.n);
  s.max_ms = *std::max_element(samples.begin(), samples.end());
  return s;
}

QoSVerdict evaluate_qos(std::span<const double> latencies_ms, double threshold_ms) {
  if (!(threshold_ms > 0.0)) fail(ErrorCode::kConfigError, fmt::format("qos threshold {}", threshold_ms));
  QoSVerdict v;
  v.threshold_ms = threshold_ms;
  if (latencies_ms.empty()) {
    v.no_data = true;
    v.pass = false;
    return v;
  }
  v.violations = static_cast<std::uint64_t>(std::count_if(
      latencies_ms.begin(), latencies_ms.end(), [&](double x) { return x > threshold_ms; }));
  v.pass = v.violations == 0;
  return v;
}

}  // namespace fedsim
