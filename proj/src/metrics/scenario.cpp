#include "fedsim/metrics/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "fedsim/error.hpp"
#include "fedsim/world.hpp"

namespace fedsim {

namespace {

std::uint64_t to_ms(double seconds) { return static_cast<std::uint64_t>(std::llround(seconds * 1000.0)); }

// Re-raises a runtime failure as ConfigError attributed to `path`.
template <class F>
auto attributed(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    fail(ErrorCode::kConfigError, fmt::format("{} ({})", path, e.what()));
  }
}

UsageSummary summarize_usage(const std::vector<double>& average,
                             const std::map<std::string, std::vector<double>>& per_cluster) {
  UsageSummary u;
  if (!average.empty()) u.median_pct = median(average);
  for (const auto& [c, series] : per_cluster) {
    if (!series.empty()) u.per_cluster_median_pct[c] = median(series);
  }
  return u;
}

RunSummary summary_of(const RunReport& r, std::uint64_t digest) {
  return RunSummary{r.seed, r.latency, r.cpu.median_pct, r.mem.median_pct, r.frames, digest};
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config) {
  validate(config);
  World world(config.seed, config.world_profile());

  for (std::size_t i = 0; i < config.clusters.size(); ++i) {
    attributed(fmt::format("clusters[{}]", i), [&] { return world.add_cluster(config.clusters[i]); });
  }
  for (std::size_t i = 0; i < config.links.size(); ++i) {
    const auto& l = config.links[i];
    attributed(fmt::format("links[{}]", i),
               [&] { return world.network.add_link(l.a, l.b, l.latency_ms, l.bandwidth_mbps, l.loss_rate); });
  }
  if (!world.run_until_ready(SimTime::ms(to_ms(config.provisioning_timeout_s)))) {
    fail(ErrorCode::kConfigError, "provisioning_timeout_s");
  }

  std::vector<SessionId> sessions;
  for (std::size_t i = 0; i < config.peerings.size(); ++i) {
    const auto& p = config.peerings[i];
    sessions.push_back(attributed(fmt::format("peerings[{}]", i), [&] {
      if (p.share) {
        world.peering.advertise_resources(p.provider, *p.share);
        if (p.mode == PeeringMode::kBidirectional) world.peering.advertise_resources(p.consumer, *p.share);
      }
      return world.peering.initiate_peering(p.consumer, p.provider, p.mode);
    }));
  }
  // Handshakes complete within a few seconds; the bound only guards against
  // a session that never settles.
  const SimTime handshake_deadline = world.engine.now() + 600'000;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    while (world.peering.session(sessions[i]).state != SessionState::kEstablished) {
      if (world.peering.session(sessions[i]).state == SessionState::kTornDown ||
          world.engine.now() >= handshake_deadline) {
        fail(ErrorCode::kConfigError, fmt::format("peerings[{}]", i));
      }
      world.engine.run_until(world.engine.now() + 100);
    }
  }
  for (std::size_t i = 0; i < config.offloads.size(); ++i) {
    const auto& o = config.offloads[i];
    attributed(fmt::format("offloads[{}]", i),
               [&] { return world.peering.offload_namespace(o.origin, o.ns, o.targets, o.policy); });
  }

  const SimTime start = world.engine.now();
  const SimTime stop = start + to_ms(config.duration_min * 60.0);
  PipelineSpec spec = config.pipeline;
  spec.exposure = config.exposure;
  const std::string pipeline_path = spec.exposure == Exposure::kL7Proxy ? "exposure" : "pipeline";
  auto pipeline = attributed(pipeline_path, [&] { return Pipeline::spawn(world, spec, stop, "xr"); });

  UsageMonitor monitor(world, config.usage.regions, config.usage.noise_sigma);
  std::vector<std::string> names;
  for (const auto& c : config.clusters) names.push_back(c.name);
  monitor.start(names, config.sample_cadence_ms, stop);

  for (std::size_t i = 0; i < config.peerings.size(); ++i) {
    if (!config.peerings[i].teardown_after_s) continue;
    const SessionId id = sessions[i];
    world.engine.schedule(start + to_ms(*config.peerings[i].teardown_after_s), EventKind::kGeneric, [&world, id] {
      if (world.peering.session(id).state != SessionState::kTornDown) world.peering.teardown_peering(id);
    });
  }

  world.engine.run_until(stop);

  RunResult out;
  out.samples = pipeline->samples();
  const SimTime cutoff = start + to_ms(config.warmup_s);
  std::uint64_t excluded = 0;
  for (const auto& s : out.samples) {
    if (s.embed_ts >= cutoff) {
      out.analysed_ms.push_back(static_cast<double>(s.latency_ms));
    } else {
      ++excluded;
    }
  }
  out.cpu_average_series = monitor.cpu_average_series();
  out.mem_average_series = monitor.mem_average_series();
  for (const auto& [c, series] : monitor.series()) {
    for (const auto& s : series) {
      out.cpu_series[c].push_back(s.cpu_pct);
      out.mem_series[c].push_back(s.mem_pct);
    }
  }

  RunReport& r = out.report;
  r.scenario = config.name;
  r.seed = config.seed;
  r.exposure = std::string(to_string(config.exposure));
  r.latency = summarize_latencies(out.analysed_ms);
  r.cpu = summarize_usage(out.cpu_average_series, out.cpu_series);
  r.mem = summarize_usage(out.mem_average_series, out.mem_series);
  for (const auto& c : config.clusters) r.provisioning.push_back(world.clusters.provisioning_report(c.name));
  const auto& counters = pipeline->counters();
  r.frames = FrameSummary{counters.generated, counters.consumed, counters.dropped, counters.in_flight, excluded};
  r.qos = evaluate_qos(out.analysed_ms, config.qos_threshold_ms);
  r.runs.push_back(summary_of(r, world.engine.trace_digest()));
  return out;
}

RunResult merge_runs(const std::vector<RunResult>& runs) {
  if (runs.empty()) fail(ErrorCode::kEmptySamples, "no runs to merge");
  RunResult m;
  for (const auto& run : runs) {
    m.analysed_ms.insert(m.analysed_ms.end(), run.analysed_ms.begin(), run.analysed_ms.end());
    m.cpu_average_series.insert(m.cpu_average_series.end(), run.cpu_average_series.begin(),
                                run.cpu_average_series.end());
    m.mem_average_series.insert(m.mem_average_series.end(), run.mem_average_series.begin(),
                                run.mem_average_series.end());
    for (const auto& [c, s] : run.cpu_series) m.cpu_series[c].insert(m.cpu_series[c].end(), s.begin(), s.end());
    for (const auto& [c, s] : run.mem_series) m.mem_series[c].insert(m.mem_series[c].end(), s.begin(), s.end());
  }
  m.samples = runs.front().samples;

  RunReport& r = m.report;
  const RunReport& first = runs.front().report;
  r.scenario = first.scenario;
  r.seed = first.seed;
  r.exposure = first.exposure;
  r.latency = summarize_latencies(m.analysed_ms);
  r.cpu = summarize_usage(m.cpu_average_series, m.cpu_series);
  r.mem = summarize_usage(m.mem_average_series, m.mem_series);
  for (const auto& run : runs) {
    const auto& rr = run.report;
    r.provisioning.insert(r.provisioning.end(), rr.provisioning.begin(), rr.provisioning.end());
    r.frames.generated += rr.frames.generated;
    r.frames.consumed += rr.frames.consumed;
    r.frames.dropped += rr.frames.dropped;
    r.frames.in_flight += rr.frames.in_flight;
    r.frames.warmup_excluded += rr.frames.warmup_excluded;
    r.runs.insert(r.runs.end(), rr.runs.begin(), rr.runs.end());
  }
  r.qos = evaluate_qos(m.analysed_ms, first.qos.threshold_ms);
  return m;
}

std::vector<RunResult> run_repeated(const ScenarioConfig& config, unsigned repeat, unsigned threads) {
  if (repeat == 0) fail(ErrorCode::kConfigError, "repeat");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, repeat);

  std::vector<RunResult> runs(repeat);
  std::atomic<unsigned> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (unsigned i = next++; i < repeat; i = next++) {
      try {
        ScenarioConfig c = config;
        c.seed = config.seed + i;
        runs[i] = run_scenario(c);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<RunResult> out;
  out.reserve(repeat + 1);
  out.push_back(merge_runs(runs));
  for (auto& r : runs) out.push_back(std::move(r));
  return out;
}

}  // namespace fedsim
