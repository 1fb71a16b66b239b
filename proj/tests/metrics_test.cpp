#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "fedsim/error.hpp"
#include "fedsim/metrics/calibration.hpp"
#include "fedsim/metrics/config.hpp"
#include "fedsim/metrics/report.hpp"
#include "fedsim/metrics/scenario.hpp"
#include "fedsim/metrics/stats.hpp"

using namespace fedsim;

namespace {

template <class F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorCode::kIoError, "none");
}

// Nearest rank for q = num/den in exact integer arithmetic.
double oracle_percentile(std::vector<double> v, std::uint64_t num, std::uint64_t den) {
  std::sort(v.begin(), v.end());
  const std::uint64_t rank = std::max<std::uint64_t>(1, (num * v.size() + den - 1) / den);
  return v[rank - 1];
}

ScenarioConfig short_run(int index, double minutes = 1.0) {
  auto cfg = paper_v1_scenario(index);
  cfg.duration_min = minutes;
  return cfg;
}

}  // namespace

TEST(Percentile, NearestRankExamples) {
  const std::vector<double> decades = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  EXPECT_EQ(percentile(decades, 0.5), 50.0);
  EXPECT_EQ(percentile(decades, 0.9), 90.0);
  EXPECT_EQ(percentile(decades, 1.0), 100.0);
  EXPECT_EQ(percentile(decades, 0.01), 10.0);
  EXPECT_EQ(percentile(std::vector<double>{7}, 0.9), 7.0);
  EXPECT_EQ(error_of([] { percentile(std::vector<double>{}, 0.5); }).code(), ErrorCode::kEmptySamples);
  EXPECT_EQ(error_of([&] { percentile(decades, 0.0); }).code(), ErrorCode::kConfigError);
  EXPECT_EQ(error_of([&] { percentile(decades, 1.1); }).code(), ErrorCode::kConfigError);
}

TEST(Percentile, MatchesSortOracleOnLargeMultiset) {
  Rng rng(2024, 0);
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(static_cast<double>(rng.below(500)));
  EXPECT_EQ(percentile(xs, 0.5), oracle_percentile(xs, 1, 2));
  EXPECT_EQ(percentile(xs, 0.9), oracle_percentile(xs, 9, 10));
  EXPECT_EQ(percentile(xs, 0.99), oracle_percentile(xs, 99, 100));
}

TEST(Summary, PopulationStddevAndOrdering) {
  const std::vector<double> xs = {2, 4, 4, 4, 5, 5, 7, 9};
  const auto s = summarize_latencies(xs);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->stddev_ms, 2.0);
  EXPECT_DOUBLE_EQ(s->mean_ms, 5.0);
  EXPECT_EQ(s->n, 8u);
  EXPECT_LE(s->p50_ms, s->p90_ms);
  EXPECT_LE(s->p90_ms, s->max_ms);
  EXPECT_FALSE(summarize_latencies(std::vector<double>{}));
}

TEST(Qos, Examples) {
  const auto ok = evaluate_qos(std::vector<double>{1, 15, 14.9}, 15);
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.violations, 0u);
  const auto bad = evaluate_qos(std::vector<double>{3, 16}, 15);
  EXPECT_FALSE(bad.pass);
  EXPECT_EQ(bad.violations, 1u);
  const auto empty = evaluate_qos(std::vector<double>{}, 15);
  EXPECT_TRUE(empty.no_data);
  EXPECT_FALSE(empty.pass);
  EXPECT_EQ(error_of([] { evaluate_qos(std::vector<double>{1}, 0); }).code(), ErrorCode::kConfigError);
}

TEST(Qos, RaisingThresholdNeverAddsViolations) {
  Rng rng(5, 5);
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) xs.push_back(rng.uniform(0, 40));
  std::uint64_t last = xs.size();
  for (double t = 0.5; t < 45; t += 0.5) {
    const auto v = evaluate_qos(xs, t);
    EXPECT_LE(v.violations, last);
    EXPECT_EQ(v.pass, v.violations == 0);
    last = v.violations;
  }
}

TEST(Export, SamplesTableShape) {
  std::vector<LatencySample> samples = {
      {2, SimTime::ms(66), SimTime::ms(800), 734, {}},
      {0, SimTime::ms(0), SimTime::ms(750), 750, {}},
      {1, SimTime::ms(33), SimTime::ms(790), 757, {}},
  };
  const auto table = export_samples(samples);
  EXPECT_EQ(table, "frame_id,embed_ms,consume_ms,latency_ms\n0,0,750,750\n1,33,790,757\n2,66,800,734\n");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_EQ(table.find('\r'), std::string::npos);
  EXPECT_EQ(export_samples(samples), table);
}

TEST(Export, SummaryRoundTrips) {
  const auto run = run_scenario(short_run(2));
  const auto bytes = export_summary(run.report);
  EXPECT_EQ(parse_summary(bytes), run.report);
  EXPECT_EQ(export_summary(parse_summary(bytes)), bytes);
}

TEST(Export, EmptyRunHasNoLatency) {
  auto cfg = short_run(1, 0.005);
  cfg.warmup_s = 0;
  const auto run = run_scenario(cfg);
  EXPECT_GT(run.report.frames.generated, 0u);
  EXPECT_EQ(run.report.frames.consumed, 0u);
  EXPECT_FALSE(run.report.latency.has_value());
  EXPECT_TRUE(run.report.qos.no_data);
  EXPECT_FALSE(run.report.qos.pass);
  EXPECT_EQ(parse_summary(export_summary(run.report)), run.report);
}

TEST(Export, WriteFailureIsIoError) {
  EXPECT_EQ(error_of([] { write_file("/nonexistent-dir/x/report.json", "x"); }).code(), ErrorCode::kIoError);
}

TEST(Config, RoundTripsThroughJson) {
  for (auto cfg : paper_v1_scenarios()) {
    EXPECT_EQ(parse_scenario(dump_scenario(cfg)), cfg) << cfg.name;
  }
  EXPECT_EQ(parse_scenario(dump_scenario(synthetic_xr_scenario())), synthetic_xr_scenario());
}

TEST(Config, ShippedFilesMatchBuiltIns) {
  const std::filesystem::path dir = FEDSIM_SOURCE_DIR "/scenarios";
  auto configs = paper_v1_scenarios();
  configs.push_back(synthetic_xr_scenario());
  for (const auto& cfg : configs) {
    const auto path = dir / (cfg.name + ".json");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(load_scenario(path.string()), cfg) << path;
    EXPECT_EQ(read_file(path.string()), dump_scenario(cfg)) << path;
  }
}

TEST(Config, FieldPathErrors) {
  auto doc = to_json(paper_v1_scenario(2));
  doc["pipeline"]["streamer"]["cluster"] = "cluster-z";
  auto e = error_of([&] { scenario_from_json(doc); });
  EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  EXPECT_EQ(e.detail(), "pipeline.streamer.cluster");

  doc = to_json(paper_v1_scenario(2));
  doc["duration_min"] = 0;
  EXPECT_EQ(error_of([&] { scenario_from_json(doc); }).detail(), "duration_min");

  doc = to_json(paper_v1_scenario(2));
  doc["links"][0]["b"] = "nowhere";
  EXPECT_EQ(error_of([&] { scenario_from_json(doc); }).detail(), "links[0].b");

  doc = to_json(paper_v1_scenario(2));
  doc["offloads"][0]["targets"][0] = "nowhere";
  EXPECT_EQ(error_of([&] { scenario_from_json(doc); }).detail(), "offloads[0].targets[0]");

  doc = to_json(paper_v1_scenario(2));
  doc["clusters"][1]["pod_cidr"] = "10.244.0.1/16";
  EXPECT_EQ(error_of([&] { scenario_from_json(doc); }).detail(), "clusters[1].pod_cidr");

  doc = to_json(paper_v1_scenario(2));
  doc["version"] = "fedsim/v0";
  EXPECT_EQ(error_of([&] { scenario_from_json(doc); }).detail(), "version");

  doc = to_json(paper_v1_scenario(2));
  doc["provider_profiles"]["k3s-like"]["vm_create_s"] = {{"kind", "uniform"}, {"lo", 5}, {"hi", 1}};
  EXPECT_EQ(error_of([&] { scenario_from_json(doc); }).detail(), "provider_profiles.k3s-like.vm_create_s");

  EXPECT_EQ(error_of([] { parse_scenario("{not json"); }).code(), ErrorCode::kConfigError);
}

TEST(Config, SeedPrecedence) {
  auto cfg = paper_v1_scenario(1);
  cfg.seed = 5;
  ::unsetenv("FEDSIM_SEED");
  EXPECT_EQ(resolve_seed(cfg), 5u);
  ::setenv("FEDSIM_SEED", "77", 1);
  EXPECT_EQ(resolve_seed(cfg), 77u);
  EXPECT_EQ(resolve_seed(cfg, 9), 9u);
  ::setenv("FEDSIM_SEED", "x7", 1);
  EXPECT_EQ(error_of([&] { resolve_seed(cfg); }).code(), ErrorCode::kConfigError);
  ::unsetenv("FEDSIM_SEED");
}

TEST(Scenario, SameSeedSameBytes) {
  const auto cfg = paper_v1_scenario(2);
  const auto a = run_scenario(cfg);
  const auto b = run_scenario(cfg);
  EXPECT_EQ(export_summary(a.report), export_summary(b.report));
  EXPECT_EQ(export_samples(a.samples), export_samples(b.samples));
  auto other = cfg;
  other.seed = 43;
  EXPECT_NE(export_summary(run_scenario(other).report), export_summary(a.report));
}

TEST(Scenario, ReportInvariants) {
  const auto run = run_scenario(short_run(4, 2.0));
  const auto& r = run.report;
  ASSERT_TRUE(r.latency);
  EXPECT_EQ(r.latency->n, r.frames.consumed - r.frames.warmup_excluded);
  EXPECT_LE(r.latency->p50_ms, r.latency->p90_ms);
  EXPECT_EQ(r.frames.generated, r.frames.consumed + r.frames.dropped + r.frames.in_flight);
  EXPECT_EQ(r.provisioning.size(), 2u);
  EXPECT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.cpu.per_cluster_median_pct.size(), 2u);
}

TEST(Scenario, RuntimeFailuresAreAttributed) {
  auto cfg = paper_v1_scenario(2);
  cfg.links.clear();
  const auto e = error_of([&] { run_scenario(cfg); });
  EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  EXPECT_EQ(e.detail().rfind("peerings[0]", 0), 0u) << e.detail();

  cfg = paper_v1_scenario(3);
  cfg.exposure = Exposure::kL7Proxy;
  EXPECT_EQ(error_of([&] { run_scenario(cfg); }).detail().rfind("exposure", 0), 0u);
}

TEST(Scenario, RepeatPoolsIsolatedRuns) {
  const auto cfg = short_run(2);
  const auto runs = run_repeated(cfg, 3, 3);
  ASSERT_EQ(runs.size(), 4u);
  const auto& merged = runs[0].report;
  ASSERT_EQ(merged.runs.size(), 3u);
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    auto single = cfg;
    single.seed = cfg.seed + i - 1;
    EXPECT_EQ(export_summary(runs[i].report), export_summary(run_scenario(single).report));
    n += runs[i].report.latency->n;
  }
  EXPECT_EQ(merged.latency->n, n);
  EXPECT_EQ(merged.provisioning.size(), 6u);
}

TEST(Scenario, PeeringTeardownMidStream) {
  auto cfg = short_run(2, 2.0);
  cfg.peerings[0].teardown_after_s = 60.0;
  const auto r = run_scenario(cfg).report;
  EXPECT_GT(r.frames.dropped, 0u);
  EXPECT_EQ(r.frames.generated, r.frames.consumed + r.frames.dropped + r.frames.in_flight);
}
