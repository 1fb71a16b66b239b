#include "fedsim/metrics/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fedsim/error.hpp"
#include "fedsim/metrics/scenario.hpp"
#include "fedsim/world.hpp"

namespace fedsim {

namespace {

Ipv4Prefix prefix(const char* text) { return *Ipv4Prefix::parse(text); }

// Fitted component parameters. Processing delays are milliseconds.
ComponentSpec renderer(std::string cluster) {
  return ComponentSpec{std::move(cluster), "xr-app", 0.25, 164, Distribution::constant(180.0)};
}
ComponentSpec streamer(std::string cluster) {
  return ComponentSpec{std::move(cluster), "xr-app", 0.20, 123, Distribution::lognormal(462.0, 0.2807)};
}
ComponentSpec client(std::string cluster) {
  return ComponentSpec{std::move(cluster), "xr-app", 0.102, 82, Distribution::constant(120.0)};
}

ClusterSpec cluster(std::string name, std::string region, std::vector<std::string> namespaces) {
  ClusterSpec c;
  c.name = std::move(name);
  c.distribution = KubeDistribution::kK3s;
  c.node_count = 1;
  c.flavor = Flavor{2, 4096, 20};
  c.region = std::move(region);
  c.pod_cidr = prefix("10.244.0.0/16");
  c.namespaces = std::move(namespaces);
  return c;
}

ScenarioConfig base(std::string name) {
  ScenarioConfig cfg;
  cfg.name = std::move(name);
  cfg.seed = 42;
  cfg.duration_min = 30.0;
  cfg.warmup_s = 10.0;
  cfg.sample_cadence_ms = 1000;
  cfg.provider_profiles = paper_v1_providers();
  cfg.pipeline.frame_interval_ms = 33;
  cfg.pipeline.frame_bytes = 125000;
  cfg.pipeline.contention_sigma_gain = 0.1946;
  cfg.usage.noise_sigma = 0.03;
  cfg.usage.regions = {
      {"local-dc", UsageBaseline{15.6, 59.0}},
      {"geneva", UsageBaseline{17.4, 60.5}},
      {"frankfurt", UsageBaseline{17.4, 60.5}},
  };
  return cfg;
}

LinkConfig link(bool remote) {
  LinkConfig l;
  l.a = "cluster-a";
  l.b = "cluster-b";
  l.latency_ms = remote ? Distribution::uniform(8.25, 10.25) : Distribution::uniform(3.75, 4.75);
  l.bandwidth_mbps = 100.0;
  l.loss_rate = 0.0;
  return l;
}

ScenarioConfig two_cluster(std::string name, bool remote, Exposure exposure) {
  ScenarioConfig cfg = base(std::move(name));
  cfg.exposure = exposure;
  cfg.pipeline.exposure = exposure;
  const std::string ra = remote ? "geneva" : "local-dc";
  const std::string rb = remote ? "frankfurt" : "local-dc";
  const bool overlay = exposure == Exposure::kOverlayTunnel;
  cfg.clusters.push_back(cluster("cluster-a", ra, {"xr-app"}));
  // Under the overlay the streamer namespace in B is the twin created by
  // offloading; under node-port it is deployed natively.
  cfg.clusters.push_back(cluster("cluster-b", rb, overlay ? std::vector<std::string>{} : std::vector<std::string>{"xr-app"}));
  cfg.links.push_back(link(remote));
  if (overlay) {
    cfg.peerings.push_back(PeeringConfig{"cluster-a", "cluster-b", PeeringMode::kUnidirectional, 0.5, std::nullopt});
    cfg.offloads.push_back(OffloadConfig{"cluster-a", "xr-app", {"cluster-b"}, OffloadPolicy::kBoth});
  }
  cfg.pipeline.renderer = renderer("cluster-a");
  cfg.pipeline.streamer = streamer("cluster-b");
  cfg.pipeline.client = client("cluster-a");
  return cfg;
}

}  // namespace

std::map<KubeDistribution, ProviderProfile> paper_v1_providers() {
  return {
      {KubeDistribution::kKubeadm,
       ProviderProfile{KubeDistribution::kKubeadm, Distribution::uniform(62, 72), Distribution::uniform(88, 98),
                       Distribution::uniform(55, 65), Distribution::uniform(12, 18)}},
      {KubeDistribution::kK3s,
       ProviderProfile{KubeDistribution::kK3s, Distribution::uniform(62, 68), Distribution::uniform(76, 80),
                       Distribution::uniform(40, 50), Distribution::uniform(12, 13)}},
  };
}

ScenarioConfig paper_v1_scenario(int index) {
  switch (index) {
    case 1: {
      ScenarioConfig cfg = base("sce1");
      cfg.exposure = Exposure::kOverlayTunnel;
      cfg.pipeline.exposure = cfg.exposure;
      cfg.clusters.push_back(cluster("cluster-a", "local-dc", {"xr-app"}));
      cfg.pipeline.renderer = renderer("cluster-a");
      cfg.pipeline.streamer = streamer("cluster-a");
      cfg.pipeline.client = client("cluster-a");
      return cfg;
    }
    case 2: return two_cluster("sce2", false, Exposure::kOverlayTunnel);
    case 3: return two_cluster("sce3", false, Exposure::kNodePort);
    case 4: return two_cluster("sce4", true, Exposure::kOverlayTunnel);
    case 5: return two_cluster("sce5", true, Exposure::kNodePort);
    default: fail(ErrorCode::kConfigError, fmt::format("scenario index {}", index));
  }
}

std::vector<ScenarioConfig> paper_v1_scenarios() {
  std::vector<ScenarioConfig> out;
  for (int i = 1; i <= 5; ++i) out.push_back(paper_v1_scenario(i));
  return out;
}

ScenarioConfig synthetic_xr_scenario() {
  ScenarioConfig cfg = two_cluster("synthetic-xr", false, Exposure::kOverlayTunnel);
  cfg.duration_min = 5.0;
  cfg.pipeline.frame_bytes = 12500;
  cfg.pipeline.contention_sigma_gain = 0.0;
  cfg.links[0].latency_ms = Distribution::constant(1.0);
  cfg.links[0].bandwidth_mbps = 10000.0;
  cfg.pipeline.renderer.delay_ms = Distribution::constant(3.0);
  cfg.pipeline.streamer.delay_ms = Distribution::uniform(3.0, 4.0);
  cfg.pipeline.client.delay_ms = Distribution::constant(3.0);
  return cfg;
}

std::vector<LifecycleSample> run_lifecycle_experiment(const std::map<KubeDistribution, ProviderProfile>& providers,
                                                      int repetitions, const std::vector<int>& sizes,
                                                      std::uint64_t base_seed) {
  std::vector<LifecycleSample> out;
  for (int r = 0; r < repetitions; ++r) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
    for (const auto& [dist, profile] : providers) {
      for (int size : sizes) {
        World world(seed, WorldProfile{providers, {}, {}});
        ClusterSpec spec;
        spec.name = "bench";
        spec.distribution = dist;
        spec.node_count = size;
        spec.pod_cidr = prefix("10.244.0.0/16");
        world.add_cluster(spec);
        if (!world.run_until_ready(SimTime::seconds(3600))) fail(ErrorCode::kNotReady, "bench");
        out.push_back(LifecycleSample{dist, size, seed, world.clusters.provisioning_report("bench")});
      }
    }
  }
  return out;
}

std::vector<CheckLine> check_profile(const std::string& profile) {
  if (profile != kPaperV1) fail(ErrorCode::kConfigError, "profile");
  std::vector<CheckLine> lines;
  auto add = [&](std::string name, bool pass, std::string detail) {
    lines.push_back(CheckLine{std::move(name), pass, std::move(detail)});
  };

  const auto providers = paper_v1_providers();
  const std::vector<int> sizes = {1, 3, 5};
  const auto lifecycle = run_lifecycle_experiment(providers, 30, sizes);
  double lo = 1e18;
  double hi = 0.0;
  for (const auto& s : lifecycle) {
    lo = std::min(lo, s.report.all_ready_at.to_seconds());
    hi = std::max(hi, s.report.all_ready_at.to_seconds());
  }
  add("provisioning band [150, 270] s", lo >= 150.0 && hi <= 270.0, fmt::format("min {:.1f} s, max {:.1f} s", lo, hi));

  auto find = [&](KubeDistribution d, int size, std::uint64_t seed) -> const ProvisionReport& {
    for (const auto& s : lifecycle) {
      if (s.distribution == d && s.node_count == size && s.seed == seed) return s.report;
    }
    fail(ErrorCode::kNotReady, "lifecycle sample");
  };
  bool ordered = true;
  bool sublinear = true;
  double worst_growth = 0.0;
  for (const auto& s : lifecycle) {
    if (s.distribution != KubeDistribution::kKubeadm) continue;
    if (find(KubeDistribution::kK3s, s.node_count, s.seed).all_ready_at >= s.report.all_ready_at) ordered = false;
  }
  for (const auto& [dist, prof] : providers) {
    const double limit = 2.0 * prof.worker_bootstrap.median();
    for (int r = 0; r < 30; ++r) {
      const auto seed = static_cast<std::uint64_t>(1 + r);
      const double growth =
          find(dist, 5, seed).all_ready_at.to_seconds() - find(dist, 1, seed).all_ready_at.to_seconds();
      worst_growth = std::max(worst_growth, growth / limit);
      if (growth >= limit) sublinear = false;
    }
  }
  add("k3s-like faster at every size and seed", ordered, "");
  add("5-node growth below 2x worker bootstrap median", sublinear,
      fmt::format("worst growth {:.2f} of limit", worst_growth));

  const double p50_target[] = {762, 794, 811, 801, 824};
  const double cpu_target[] = {43.2, 31.5, 29.4, 33.5, 31.0};
  double cpu[5] = {};
  bool all_fail_qos = true;
  for (int i = 1; i <= 5; ++i) {
    const auto result = run_scenario(paper_v1_scenario(i));
    const auto& r = result.report;
    const auto name = fmt::format("sce{}", i);
    if (!r.latency) {
      add(name + " latency", false, "no data");
      continue;
    }
    const auto& l = *r.latency;
    add(name + " p50 within 3%", std::abs(l.p50_ms - p50_target[i - 1]) <= 0.03 * p50_target[i - 1],
        fmt::format("p50 {:.1f} ms (target {})", l.p50_ms, p50_target[i - 1]));
    add(name + " p90 in [900, 1100]", l.p90_ms >= 900 && l.p90_ms <= 1100, fmt::format("p90 {:.1f} ms", l.p90_ms));
    add(name + " n >= 10000", l.n >= 10000, fmt::format("n {}", l.n));
    if (i == 1) {
      add("sce1 stddev within 15% of 202", std::abs(l.stddev_ms - 202.0) <= 0.15 * 202.0,
          fmt::format("stddev {:.1f} ms", l.stddev_ms));
    }
    cpu[i - 1] = r.cpu.median_pct;
    add(name + " cpu within 2 pp", std::abs(r.cpu.median_pct - cpu_target[i - 1]) <= 2.0,
        fmt::format("cpu {:.2f}% (target {})", r.cpu.median_pct, cpu_target[i - 1]));
    add(name + " mem in [62, 70]", r.mem.median_pct >= 62.0 && r.mem.median_pct <= 70.0,
        fmt::format("mem {:.2f}%", r.mem.median_pct));
    if (r.qos.pass) all_fail_qos = false;
  }
  add("overlay cpu above node-port", cpu[1] > cpu[2] && cpu[3] > cpu[4],
      fmt::format("sce2 {:.2f} > sce3 {:.2f}, sce4 {:.2f} > sce5 {:.2f}", cpu[1], cpu[2], cpu[3], cpu[4]));
  const auto synthetic = run_scenario(synthetic_xr_scenario());
  add("synthetic profile meets 15 ms", synthetic.report.qos.pass,
      fmt::format("violations {}", synthetic.report.qos.violations));
  add("paper-v1 scenarios miss 15 ms", all_fail_qos, "");
  return lines;
}

}  // namespace fedsim
