#include "fedsim/metrics/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

using nlohmann::json;

namespace {

json to_json(const LatencySummary& s) {
  return {{"p50_ms", s.p50_ms}, {"p90_ms", s.p90_ms}, {"stddev_ms", s.stddev_ms},
          {"mean_ms", s.mean_ms}, {"max_ms", s.max_ms}, {"n", s.n}};
}

LatencySummary latency_from(const json& j) {
  LatencySummary s;
  s.p50_ms = j.at("p50_ms").get<double>();
  s.p90_ms = j.at("p90_ms").get<double>();
  s.stddev_ms = j.at("stddev_ms").get<double>();
  s.mean_ms = j.at("mean_ms").get<double>();
  s.max_ms = j.at("max_ms").get<double>();
  s.n = j.at("n").get<std::uint64_t>();
  return s;
}

json to_json(const FrameSummary& f) {
  return {{"generated", f.generated}, {"consumed", f.consumed}, {"dropped", f.dropped},
          {"in_flight", f.in_flight}, {"warmup_excluded", f.warmup_excluded}};
}

FrameSummary frames_from(const json& j) {
  FrameSummary f;
  f.generated = j.at("generated").get<std::uint64_t>();
  f.consumed = j.at("consumed").get<std::uint64_t>();
  f.dropped = j.at("dropped").get<std::uint64_t>();
  f.in_flight = j.at("in_flight").get<std::uint64_t>();
  f.warmup_excluded = j.at("warmup_excluded").get<std::uint64_t>();
  return f;
}

json to_json(const UsageSummary& u) {
  return {{"median_pct", u.median_pct}, {"per_cluster_median_pct", u.per_cluster_median_pct}};
}

UsageSummary usage_from(const json& j) {
  UsageSummary u;
  u.median_pct = j.at("median_pct").get<double>();
  u.per_cluster_median_pct = j.at("per_cluster_median_pct").get<std::map<std::string, double>>();
  return u;
}

json optional_latency(const std::optional<LatencySummary>& s) { return s ? to_json(*s) : json(nullptr); }

std::optional<LatencySummary> optional_latency_from(const json& j) {
  if (!j.contains("latency") || j.at("latency").is_null()) return std::nullopt;
  return latency_from(j.at("latency"));
}

}  // namespace

nlohmann::json to_json(const RunReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["exposure"] = r.exposure;
  j["latency"] = optional_latency(r.latency);
  j["cpu"] = to_json(r.cpu);
  j["mem"] = to_json(r.mem);
  j["provisioning"] = json::array();
  for (const auto& p : r.provisioning) {
    j["provisioning"].push_back({{"cluster", p.cluster},
                                 {"cp_ready_ms", p.cp_ready_at.millis},
                                 {"all_ready_ms", p.all_ready_at.millis}});
  }
  j["frames"] = to_json(r.frames);
  j["qos"] = {{"threshold_ms", r.qos.threshold_ms},
              {"violations", r.qos.violations},
              {"pass", r.qos.pass},
              {"no_data", r.qos.no_data}};
  j["runs"] = json::array();
  for (const auto& run : r.runs) {
    j["runs"].push_back({{"seed", run.seed},
                         {"latency", optional_latency(run.latency)},
                         {"cpu_median_pct", run.cpu_median_pct},
                         {"mem_median_pct", run.mem_median_pct},
                         {"frames", to_json(run.frames)},
                         {"trace_digest", run.trace_digest}});
  }
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  try {
    RunReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.exposure = j.at("exposure").get<std::string>();
    r.latency = optional_latency_from(j);
    r.cpu = usage_from(j.at("cpu"));
    r.mem = usage_from(j.at("mem"));
    for (const auto& p : j.at("provisioning")) {
      r.provisioning.push_back(ProvisionReport{p.at("cluster").get<std::string>(),
                                               SimTime::ms(p.at("cp_ready_ms").get<std::uint64_t>()),
                                               SimTime::ms(p.at("all_ready_ms").get<std::uint64_t>())});
    }
    r.frames = frames_from(j.at("frames"));
    const auto& q = j.at("qos");
    r.qos.threshold_ms = q.at("threshold_ms").get<double>();
    r.qos.violations = q.at("violations").get<std::uint64_t>();
    r.qos.pass = q.at("pass").get<bool>();
    r.qos.no_data = q.at("no_data").get<bool>();
    for (const auto& run : j.at("runs")) {
      RunSummary s;
      s.seed = run.at("seed").get<std::uint64_t>();
      s.latency = optional_latency_from(run);
      s.cpu_median_pct = run.at("cpu_median_pct").get<double>();
      s.mem_median_pct = run.at("mem_median_pct").get<double>();
      s.frames = frames_from(run.at("frames"));
      s.trace_digest = run.at("trace_digest").get<std::uint64_t>();
      r.runs.push_back(std::move(s));
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, fmt::format("report: {}", e.what()));
  }
}

std::string export_summary(const RunReport& report) { return to_json(report).dump(2) + "\n"; }

RunReport parse_summary(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfigError, fmt::format("report: {}", e.what()));
  }
  return report_from_json(doc);
}

std::string export_samples(std::vector<LatencySample> samples) {
  std::sort(samples.begin(), samples.end(),
            [](const LatencySample& a, const LatencySample& b) { return a.frame_id < b.frame_id; });
  std::string out = "frame_id,embed_ms,consume_ms,latency_ms\n";
  out.reserve(out.size() + samples.size() * 28);
  for (const auto& s : samples) {
    fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", s.frame_id, s.embed_ts.millis, s.consume_ts.millis,
                   s.latency_ms);
  }
  return out;
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) fail(ErrorCode::kIoError, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace fedsim
