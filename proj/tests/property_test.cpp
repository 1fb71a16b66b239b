// Randomised invariant suites. Every suite counts its cases and asserts the
// count, so a silently shrunken loop cannot pass.

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "fedsim/error.hpp"
#include "fedsim/metrics/calibration.hpp"
#include "fedsim/metrics/report.hpp"
#include "fedsim/metrics/scenario.hpp"
#include "fedsim/metrics/stats.hpp"
#include "fedsim/stream/pipeline.hpp"
#include "support.hpp"

using namespace fedsim;
using namespace fedsim::testing;

namespace {

constexpr int kCases = 1000;

Distribution random_delay(Rng& rng, double scale) {
  switch (rng.below(3)) {
    case 0: return Distribution::constant(rng.uniform(0, scale));
    case 1: {
      const double lo = rng.uniform(0, scale);
      return Distribution::uniform(lo, lo + rng.uniform(0, scale));
    }
    default: return Distribution::lognormal(rng.uniform(1, scale), rng.uniform(0, 0.8));
  }
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

}  // namespace

TEST(Property, PercentileEqualsSortOracle) {
  Rng rng(101, 0);
  int cases = 0;
  for (; cases < kCases; ++cases) {
    const std::size_t n = 1 + rng.below(rng.bernoulli(0.1) ? 5000 : 60);
    std::vector<double> xs(n);
    const bool ties = rng.bernoulli(0.5);
    for (auto& x : xs) x = ties ? static_cast<double>(rng.below(10)) : rng.uniform(-1e3, 1e3);
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 4; ++k) {
      const std::uint64_t den = 1 + rng.below(1000);
      const std::uint64_t num = 1 + rng.below(den);
      const std::uint64_t rank = (num * n + den - 1) / den;
      const double q = static_cast<double>(num) / static_cast<double>(den);
      ASSERT_EQ(percentile(xs, q), sorted[rank - 1]) << "n=" << n << " q=" << num << "/" << den;
    }
    ASSERT_EQ(percentile(xs, 1.0), sorted.back());
    const auto s = summarize_latencies(xs);
    ASSERT_LE(s->p50_ms, s->p90_ms);
    ASSERT_LE(s->p90_ms, s->max_ms);
  }
  EXPECT_GE(cases, kCases);
}

TEST(Property, FrameConservationUnderInterleavings) {
  Rng rng(202, 0);
  int cases = 0;
  std::uint64_t events_checked = 0;
  std::uint64_t total_dropped = 0;
  for (; cases < kCases; ++cases) {
    NetworkProfile net;
    net.local_latency_ms = random_delay(rng, 3);
    net.tunnel_overhead_ms = rng.uniform(0, 3);
    net.node_port_penalty_ms = rng.uniform(0, 12);
    World w(rng.next_u64(), WorldProfile{instant_providers(), net, {}});
    const auto exposure = rng.bernoulli(0.5) ? Exposure::kOverlayTunnel : Exposure::kNodePort;
    add_ready(w, spec("a", 1 + static_cast<int>(rng.below(2)), "10.42.0.0/16"));
    add_ready(w, spec("b", 1 + static_cast<int>(rng.below(2)), "10.42.0.0/16",
                      exposure == Exposure::kNodePort ? std::vector<std::string>{"xr-app"}
                                                      : std::vector<std::string>{}));
    w.network.add_link("a", "b", random_delay(rng, 20), rng.uniform(10, 1000), rng.bernoulli(0.5) ? rng.uniform(0, 0.3) : 0);
    std::optional<SessionId> session;
    if (exposure == Exposure::kOverlayTunnel) {
      session = peer(w, "a", "b", rng.bernoulli(0.5) ? PeeringMode::kBidirectional : PeeringMode::kUnidirectional);
      w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kBoth);
    }
    PipelineSpec ps;
    ps.exposure = exposure;
    ps.frame_interval_ms = 5 + rng.below(60);
    ps.frame_bytes = 1 + static_cast<std::int64_t>(rng.below(200000));
    ps.contention_sigma_gain = rng.uniform(0, 0.5);
    ps.renderer = ComponentSpec{"a", "xr-app", 0.1, 64, random_delay(rng, 200)};
    ps.streamer = ComponentSpec{rng.bernoulli(0.5) ? "a" : "b", "xr-app", 0.1, 64, random_delay(rng, 400)};
    ps.client = ComponentSpec{rng.bernoulli(0.5) ? "a" : "b", "xr-app", 0.1, 64, random_delay(rng, 200)};

    const SimTime start = w.engine.now();
    const SimTime stop = start + 500 + rng.below(3000);
    auto p = Pipeline::spawn(w, ps, stop);
    bool conserved = true;
    w.engine.set_observer([&](const Event&) {
      ++events_checked;
      if (!p->counters().conserved()) conserved = false;
    });
    if (session && rng.bernoulli(0.6)) {
      w.engine.schedule(start + rng.below(3500), EventKind::kGeneric, [&w, id = *session] {
        if (w.peering.session(id).state != SessionState::kTornDown) w.peering.teardown_peering(id);
      });
    }
    // Random horizon: sometimes mid-stream, sometimes fully drained.
    w.engine.run_until(start + rng.below(12000));
    ASSERT_TRUE(p->counters().conserved());
    ASSERT_TRUE(conserved) << "case " << cases;
    for (const auto& s : p->samples()) {
      ASSERT_GE(s.consume_ts, s.embed_ts);
      ASSERT_EQ(s.latency_ms, s.stages.total());
      ASSERT_EQ(s.consume_ts - s.embed_ts, s.latency_ms);
    }
    total_dropped += p->counters().dropped;
  }
  EXPECT_GE(cases, kCases);
  EXPECT_GT(events_checked, 100'000u);
  EXPECT_GT(total_dropped, 0u);
}

TEST(Property, TunnelPrefixesDisjointAndTranslationRoundTrips) {
  Rng rng(303, 0);
  int cases = 0;
  int exhausted = 0;
  for (; cases < kCases; ++cases) {
    Engine e(rng.next_u64());
    NetworkProfile prof;
    prof.translation_pool = pick(rng, std::vector<Ipv4Prefix>{*Ipv4Prefix::parse("10.64.0.0/10"),
                                                              *Ipv4Prefix::parse("10.64.0.0/14"),
                                                              *Ipv4Prefix::parse("100.64.0.0/16")});
    Network net(e, prof);
    const int n = 2 + static_cast<int>(rng.below(5));
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
      names.push_back("c" + std::to_string(i));
      // A few shared CIDRs so collisions are common; some land in the pool.
      const auto base = pick(rng, std::vector<std::uint32_t>{0x0A2A0000u, 0x0A2A0000u, 0x0A400000u, 0xAC100000u,
                                                             0x64400000u, rng.next_u64() & 0xFFFFFF00u});
      const auto len = static_cast<std::uint8_t>(12 + rng.below(13));
      net.register_cluster(names.back(), Ipv4Prefix::make(Ipv4Address{base}, len));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) net.add_link(names[i], names[j], Distribution::constant(1), 1000, 0);
    }
    std::vector<TunnelId> active;
    for (int op = 0; op < 12; ++op) {
      if (!active.empty() && rng.bernoulli(0.35)) {
        const auto k = rng.below(active.size());
        net.close_tunnel(active[k]);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        const auto a = rng.below(n);
        auto b = rng.below(n - 1);
        if (b >= a) ++b;
        try {
          active.push_back(net.establish_tunnel(static_cast<std::uint64_t>(op), names[a], names[b]));
        } catch (const Error& err) {
          ASSERT_EQ(err.code(), ErrorCode::kExhaustedPrefixSpace);
          ++exhausted;
        }
      }
      // Oracle: enumerate every active translated prefix.
      std::vector<Ipv4Prefix> translated;
      for (auto id : active) {
        const auto& t = net.tunnel(id);
        translated.push_back(t.a_remap.translated);
        translated.push_back(t.b_remap.translated);
        ASSERT_EQ(t.a_remap.translated.length, t.a_remap.origin.length);
      }
      for (std::size_t x = 0; x < translated.size(); ++x) {
        ASSERT_TRUE(prof.translation_pool.contains(translated[x].first()) &&
                    prof.translation_pool.contains(translated[x].last()));
        for (std::size_t y = x + 1; y < translated.size(); ++y) ASSERT_FALSE(translated[x].overlaps(translated[y]));
        for (const auto& c : net.cluster_cidrs()) ASSERT_FALSE(translated[x].overlaps(c));
      }
      ASSERT_TRUE(net.check_invariants().empty());
      for (auto id : active) {
        for (auto dir : {TunnelDirection::kAToB, TunnelDirection::kBToA}) {
          const auto& remap = net.tunnel(id).remap(dir);
          for (int s = 0; s < 4; ++s) {
            const auto x = remap.origin.with_host(static_cast<std::uint32_t>(rng.next_u64()));
            const auto y = net.translate_address(id, dir, x);
            ASSERT_TRUE(remap.translated.contains(y));
            ASSERT_EQ(remap.origin.host_part(x), remap.translated.host_part(y));
            ASSERT_EQ(net.reverse_translate(id, dir, y), x);
          }
        }
      }
    }
  }
  EXPECT_GE(cases, kCases);
  EXPECT_GT(exhausted, 0);
}

TEST(Property, SchedulerNeverOvercommitsAndHonoursPolicy) {
  Rng rng(404, 0);
  int cases = 0;
  int placements = 0;
  for (; cases < kCases; ++cases) {
    World w(rng.next_u64(), instant_profile());
    add_ready(w, spec("a", 1 + static_cast<int>(rng.below(4)), "10.42.0.0/16"));
    add_ready(w, spec("b", 1 + static_cast<int>(rng.below(3)), "10.43.0.0/16", {}));
    add_ready(w, spec("c", 1, "10.44.0.0/16", {}));
    w.network.add_link("a", "b", Distribution::constant(1), 1000, 0);
    w.network.add_link("a", "c", Distribution::constant(1), 1000, 0);
    for (auto& n : w.clusters.get("a").nodes()) {
      n.allocated = Resources{static_cast<std::int64_t>(rng.below(2001)), static_cast<std::int64_t>(rng.below(4097))};
    }
    if (rng.bernoulli(0.7)) {
      w.peering.advertise_resources("b", rng.uniform(0.05, 1.0));
      peer(w, "a", "b", rng.bernoulli(0.5) ? PeeringMode::kBidirectional : PeeringMode::kUnidirectional);
      if (rng.bernoulli(0.8)) {
        w.peering.offload_namespace("a", "xr-app", {"b"},
                                    pick(rng, std::vector<OffloadPolicy>{OffloadPolicy::kPods, OffloadPolicy::kServices,
                                                                         OffloadPolicy::kBoth}));
      }
    }
    for (int op = 0; op < 15; ++op) {
      const Resources req{static_cast<std::int64_t>(1 + rng.below(1500)), static_cast<std::int64_t>(1 + rng.below(3000))};
      const std::string target = rng.bernoulli(0.8) ? "b" : "c";
      const auto policy = pick(rng, std::vector<PlacementPolicy>{PlacementPolicy::local_first(), PlacementPolicy::balanced(),
                                                                 PlacementPolicy::offload_target(target)});
      const std::string ns = rng.bernoulli(0.8) ? "xr-app" : "default";

      // Oracle over the view.
      const auto view = w.scheduler.cluster_view("a");
      const auto* off = w.peering.find_offload("a", ns);
      std::vector<const NodeView*> feasible;
      for (const auto& n : view) {
        if (!req.fits_within(n.free())) continue;
        if (n.kind == NodeKind::kVirtual &&
            !(off && off->targets_cluster(n.backing_cluster) && allows_pods(off->policy))) {
          continue;
        }
        if (policy.kind == PlacementPolicy::Kind::kOffloadTarget &&
            (n.kind != NodeKind::kVirtual || n.backing_cluster != policy.target)) {
          continue;
        }
        feasible.push_back(&n);
      }
      std::optional<ErrorCode> expected_error;
      const NodeView* expected = nullptr;
      if (policy.kind == PlacementPolicy::Kind::kOffloadTarget && !w.peering.established("a", policy.target)) {
        expected_error = ErrorCode::kPolicyInfeasible;
      } else if (feasible.empty()) {
        expected_error = ErrorCode::kUnschedulable;
      } else if (policy.kind == PlacementPolicy::Kind::kBalanced) {
        for (const auto* n : feasible) {
          if (!expected || n->free().millicpu > expected->free().millicpu) expected = n;
        }
      } else if (policy.kind == PlacementPolicy::Kind::kLocalFirst) {
        for (const auto* n : feasible) {
          if (n->kind == NodeKind::kPhysical) {
            expected = n;
            break;
          }
        }
        if (!expected) expected = feasible.front();
      } else {
        expected = feasible.front();
      }

      try {
        const auto first = w.scheduler.select(req, "a", policy, ns);
        const auto again = w.scheduler.select(req, "a", policy, ns);
        ASSERT_FALSE(expected_error) << to_string(*expected_error);
        ASSERT_EQ(first.node, again.node);
        ASSERT_EQ(first.node, expected->id);
        if (policy.kind == PlacementPolicy::Kind::kOffloadTarget) {
          ASSERT_EQ(first.kind, NodeKind::kVirtual);
          ASSERT_EQ(first.backing_cluster, policy.target);
        }
        w.scheduler.schedule(req, "a", policy, ns);
        ++placements;
      } catch (const Error& err) {
        ASSERT_TRUE(expected_error) << err.what();
        ASSERT_EQ(err.code(), *expected_error);
      }
      for (const auto& n : w.scheduler.cluster_view("a")) {
        ASSERT_TRUE(n.allocated.fits_within(n.capacity)) << n.id;
      }
      ASSERT_TRUE(w.scheduler.check_invariants().empty());
    }
  }
  EXPECT_GE(cases, kCases);
  EXPECT_GT(placements, 1000);
}

TEST(Property, PeeringTeardownPreservesFederationInvariants) {
  Rng rng(505, 0);
  int cases = 0;
  int offloaded = 0;
  int teardowns = 0;
  for (; cases < kCases; ++cases) {
    World w(rng.next_u64(), instant_profile());
    const int n = 2 + static_cast<int>(rng.below(3));
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
      names.push_back(std::string(1, static_cast<char>('a' + i)));
      add_ready(w, spec(names.back(), 1 + static_cast<int>(rng.below(2)), "10.42.0.0/16"));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) w.network.add_link(names[i], names[j], Distribution::constant(1), 1000, 0);
    }
    std::vector<std::string> issues;
    w.engine.set_observer([&](const Event&) {
      if (issues.empty()) issues = w.peering.check_invariants();
    });

    auto oracle = [&] {
      // Virtual node present exactly for established directions.
      std::set<std::pair<std::string, std::string>> want, have;
      for (const auto* s : w.peering.sessions()) {
        if (s->state != SessionState::kEstablished) continue;
        want.emplace(s->consumer, s->provider);
        if (s->mode == PeeringMode::kBidirectional) want.emplace(s->provider, s->consumer);
      }
      for (const auto& vn : w.peering.all_virtual_nodes()) {
        have.emplace(vn.host, vn.backing);
        ASSERT_TRUE(vn.allocated.fits_within(vn.capacity));
      }
      ASSERT_EQ(want, have);
      // One live incarnation per shadow, and a shadow per incarnation.
      for (const auto& origin : names) {
        for (const auto& [key, pod] : w.clusters.get(origin).pods()) {
          if (!pod.shadow) continue;
          int live = 0;
          for (const auto& other : names) {
            for (const auto& [k2, p2] : w.clusters.get(other).pods()) {
              live += (p2.origin_cluster == origin && p2.name == pod.name && p2.status != PodStatus::kTerminated);
            }
          }
          ASSERT_EQ(live, 1) << origin << "/" << key;
        }
      }
      for (const auto& c : names) {
        for (const auto& [key, pod] : w.clusters.get(c).pods()) {
          if (pod.origin_cluster.empty()) continue;
          const auto* off = [&]() -> const NamespaceOffload* {
            for (const auto& [ns, info] : w.clusters.get(c).namespaces()) {
              if (ns == pod.ns) return w.peering.find_offload(info.twin_of_cluster, info.twin_of_namespace);
            }
            return nullptr;
          }();
          ASSERT_NE(off, nullptr);
          const auto* shadow = w.clusters.get(pod.origin_cluster).find_pod(off->ns, pod.name);
          ASSERT_TRUE(shadow && shadow->shadow && shadow->incarnation_cluster == c);
        }
      }
      // Twins exist exactly for active offloads.
      for (const auto& c : names) {
        for (const auto& [ns, info] : w.clusters.get(c).namespaces()) {
          if (info.twin_of_cluster.empty()) continue;
          const auto* off = w.peering.find_offload(info.twin_of_cluster, info.twin_of_namespace);
          ASSERT_NE(off, nullptr) << c << "/" << ns;
          ASSERT_TRUE(off->targets_cluster(c)) << c << "/" << ns;
          ASSERT_EQ(off->twins.at(c), ns);
        }
      }
    };

    for (const auto& c : names) w.peering.advertise_resources(c, rng.uniform(0.3, 1.0));
    int pod_counter = 0;
    for (int op = 0; op < 40; ++op) {
      const auto& x = pick(rng, names);
      // Mostly distinct pairs; the occasional self pair exercises rejection.
      std::string y = pick(rng, names);
      if (y == x && rng.bernoulli(0.9)) y = names[(std::find(names.begin(), names.end(), x) - names.begin() + 1) % n];
      const auto roll = rng.below(100);
      const int kind = roll < 15 ? 0 : roll < 20 ? 1 : roll < 35 ? 2 : roll < 65 ? 3 : roll < 70 ? 4 : roll < 75 ? 5 : 6;
      try {
        switch (kind) {
          case 0:
            w.peering.initiate_peering(x, y, rng.bernoulli(0.5) ? PeeringMode::kBidirectional : PeeringMode::kUnidirectional);
            break;
          case 1: {
            std::vector<SessionId> live;
            for (const auto* s : w.peering.sessions()) {
              if (s->state != SessionState::kTornDown) live.push_back(s->id);
            }
            if (!live.empty()) {
              w.peering.teardown_peering(pick(rng, live));
              ++teardowns;
            }
            break;
          }
          case 2:
            if (!w.peering.find_offload(x, "xr-app")) {
              w.peering.offload_namespace(x, "xr-app", {y},
                                          pick(rng, std::vector<OffloadPolicy>{OffloadPolicy::kPods, OffloadPolicy::kBoth,
                                                                               OffloadPolicy::kServices}));
            }
            break;
          case 3: {
            const auto vnodes = w.peering.virtual_nodes(x);
            if (vnodes.empty() || !w.peering.find_offload(x, "xr-app")) break;
            const auto name = "p" + std::to_string(pod_counter++);
            w.clusters.get(x).create_pod("xr-app", name,
                                         Resources{static_cast<std::int64_t>(1 + rng.below(300)),
                                                   static_cast<std::int64_t>(1 + rng.below(600))});
            w.peering.offload_pod(x, "xr-app", name, pick(rng, vnodes)->id);
            ++offloaded;
            break;
          }
          case 4: w.peering.advertise_resources(x, rng.uniform(0.01, 1.0)); break;
          case 5:
            if (w.peering.find_offload(x, "xr-app")) w.peering.unoffload_namespace(x, "xr-app");
            break;
          default: w.engine.run_until(w.engine.now() + rng.below(1500)); break;
        }
      } catch (const Error&) {
        // Rejected operations must leave the federation consistent too.
      }
      ASSERT_TRUE(issues.empty()) << issues.front();
      ASSERT_TRUE(w.peering.check_invariants().empty()) << w.peering.check_invariants().front();
      ASSERT_TRUE(w.network.check_invariants().empty());
      oracle();
    }
  }
  EXPECT_GE(cases, kCases);
  EXPECT_GT(offloaded, 500);
  EXPECT_GT(teardowns, 500);
}

TEST(Property, FullRunsAreByteDeterministic) {
  Rng rng(606, 0);
  auto random_config = [&](double max_minutes) {
    auto cfg = paper_v1_scenario(1 + static_cast<int>(rng.below(5)));
    cfg.seed = rng.next_u64();
    cfg.duration_min = rng.uniform(0.02, max_minutes);
    cfg.warmup_s = rng.uniform(0, 5);
    cfg.sample_cadence_ms = 100 + rng.below(2000);
    if (!cfg.links.empty()) {
      cfg.links[0].loss_rate = rng.bernoulli(0.5) ? rng.uniform(0, 0.2) : 0.0;
      cfg.links[0].latency_ms = random_delay(rng, 20);
    }
    if (!cfg.peerings.empty() && rng.bernoulli(0.5)) cfg.peerings[0].teardown_after_s = rng.uniform(0, 60 * max_minutes);
    cfg.pipeline.streamer.delay_ms = random_delay(rng, 500);
    return cfg;
  };
  auto bytes = [](const ScenarioConfig& cfg) {
    const auto r = run_scenario(cfg);
    return export_summary(r.report) + export_samples(r.samples);
  };
  // Ten substantial pairs, then many short ones.
  for (int i = 0; i < 10; ++i) {
    const auto cfg = random_config(3.0);
    const auto first = bytes(cfg);
    ASSERT_EQ(first, bytes(cfg)) << cfg.name << " seed " << cfg.seed;
    ASSERT_EQ(first, bytes(parse_scenario(dump_scenario(cfg))));
  }
  int cases = 10;
  for (; cases < kCases; ++cases) {
    const auto cfg = random_config(0.05);
    ASSERT_EQ(bytes(cfg), bytes(cfg)) << cfg.name << " seed " << cfg.seed;
  }
  EXPECT_GE(cases, kCases);
}
