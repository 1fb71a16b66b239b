#include <algorithm>

#include <gtest/gtest.h>

#include "fedsim/error.hpp"
#include "support.hpp"

using namespace fedsim;
using namespace fedsim::testing;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoError;
}

// Two ready clusters "a" and "b" of two 2-vCPU/4096 MB nodes each, linked.
struct Federation : ::testing::Test {
  World w{21, instant_profile()};

  void SetUp() override {
    add_ready(w, spec("a", 2, "10.42.0.0/16"));
    add_ready(w, spec("b", 2, "10.42.0.0/16", {}));
    w.network.add_link("a", "b", Distribution::constant(2), 1000, 0);
  }

  void settle(std::uint64_t ms = 2000) { w.engine.run_until(w.engine.now() + ms); }
};

}  // namespace

TEST_F(Federation, BidirectionalCreatesMirroredVirtualNodes) {
  const auto id = peer(w, "a", "b", PeeringMode::kBidirectional);
  const auto in_a = w.peering.virtual_nodes("a");
  const auto in_b = w.peering.virtual_nodes("b");
  ASSERT_EQ(in_a.size(), 1u);
  ASSERT_EQ(in_b.size(), 1u);
  EXPECT_EQ(in_a[0]->backing, "b");
  EXPECT_EQ(in_b[0]->backing, "a");
  EXPECT_EQ(in_a[0]->session, id);
  EXPECT_TRUE(w.peering.session(id).tunnel.has_value());
  EXPECT_TRUE(w.network.tunnel_active(*w.peering.session(id).tunnel));
  EXPECT_TRUE(w.peering.check_invariants().empty());
}

TEST_F(Federation, HandshakeWalksStatesOverConfiguredDelays) {
  const SimTime t0 = w.engine.now();
  const auto id = w.peering.initiate_peering("a", "b", PeeringMode::kUnidirectional);
  EXPECT_EQ(w.peering.session(id).state, SessionState::kDiscovered);
  w.engine.run_until(t0 + 199);
  EXPECT_EQ(w.peering.session(id).state, SessionState::kDiscovered);
  w.engine.run_until(t0 + 200);
  EXPECT_EQ(w.peering.session(id).state, SessionState::kAuthenticating);
  EXPECT_FALSE(w.peering.session(id).consumer_token.empty());
  w.engine.run_until(t0 + 499);
  EXPECT_TRUE(w.peering.virtual_nodes("a").empty());
  w.engine.run_until(t0 + 500);
  EXPECT_EQ(w.peering.session(id).state, SessionState::kEstablished);
  EXPECT_TRUE(w.peering.session(id).consumer_verified && w.peering.session(id).provider_verified);
}

TEST_F(Federation, InitiationErrors) {
  EXPECT_EQ(code_of([&] { w.peering.initiate_peering("a", "a", PeeringMode::kBidirectional); }),
            ErrorCode::kSelfPeering);
  World slow(1, WorldProfile{{{KubeDistribution::kK3s, constant_provider(KubeDistribution::kK3s, 10, 10, 10, 10)}},
                             {},
                             {}});
  slow.add_cluster(spec("x"));
  slow.add_cluster(spec("y"));
  EXPECT_EQ(code_of([&] { slow.peering.initiate_peering("x", "y", PeeringMode::kBidirectional); }),
            ErrorCode::kNotReady);
  peer(w, "a", "b");
  EXPECT_EQ(code_of([&] { w.peering.initiate_peering("b", "a", PeeringMode::kUnidirectional); }),
            ErrorCode::kAlreadyPeered);
}

TEST_F(Federation, UnidirectionalShareArithmetic) {
  // b offers share x free: 4 vCPU * 0.5 = 2 vCPU, 8192 MB * 0.5 = 4096 MB.
  peer(w, "a", "b", PeeringMode::kUnidirectional);
  const auto in_a = w.peering.virtual_nodes("a");
  ASSERT_EQ(in_a.size(), 1u);
  EXPECT_TRUE(w.peering.virtual_nodes("b").empty());
  EXPECT_EQ(in_a[0]->capacity, (Resources{2000, 4096}));
}

TEST_F(Federation, AdvertiseResources) {
  const auto quarter = w.peering.advertise_resources("b", 0.25);
  EXPECT_EQ(quarter.amount, (Resources{1000, 2048}));
  const auto full = w.peering.advertise_resources("b", 1.0);
  EXPECT_EQ(full.amount, w.clusters.get("b").free_capacity());
  EXPECT_EQ(code_of([&] { w.peering.advertise_resources("b", 0.0); }), ErrorCode::kInvalidShare);
  EXPECT_EQ(code_of([&] { w.peering.advertise_resources("b", 1.5); }), ErrorCode::kInvalidShare);
}

TEST_F(Federation, ReadvertiseTakesEffectAtNextSync) {
  peer(w, "a", "b", PeeringMode::kUnidirectional);
  w.peering.advertise_resources("b", 0.25);
  EXPECT_EQ(w.peering.virtual_nodes("a")[0]->capacity.millicpu, 2000);
  settle(w.peering.profile().sync_tick_ms);
  EXPECT_EQ(w.peering.virtual_nodes("a")[0]->capacity.millicpu, 1000);
}

TEST_F(Federation, OffloadCreatesAndWithdrawsTwin) {
  peer(w, "a", "b");
  const auto& off = w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kBoth);
  EXPECT_EQ(off.twins.at("b"), "xr-app");
  ASSERT_TRUE(w.clusters.get("b").has_namespace("xr-app"));
  EXPECT_EQ(w.clusters.get("b").namespaces().at("xr-app").twin_of_cluster, "a");
  w.peering.unoffload_namespace("a", "xr-app");
  EXPECT_FALSE(w.clusters.get("b").has_namespace("xr-app"));
  EXPECT_TRUE(w.clusters.get("a").has_namespace("xr-app"));
  EXPECT_EQ(w.peering.find_offload("a", "xr-app"), nullptr);
}

TEST_F(Federation, OffloadErrors) {
  add_ready(w, spec("c", 1, "10.60.0.0/16"));
  peer(w, "a", "b");
  EXPECT_EQ(code_of([&] { w.peering.offload_namespace("a", "xr-app", {"c"}, OffloadPolicy::kBoth); }),
            ErrorCode::kNotPeered);
  EXPECT_EQ(code_of([&] { w.peering.offload_namespace("a", "nope", {"b"}, OffloadPolicy::kBoth); }),
            ErrorCode::kNoSuchNamespace);
}

TEST_F(Federation, TwinNameCollisionIsQualified) {
  w.clusters.get("b").create_namespace(NamespaceInfo{"xr-app", {}, {}});
  peer(w, "a", "b");
  const auto& off = w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kBoth);
  EXPECT_EQ(off.twins.at("b"), "xr-app-a");
  EXPECT_TRUE(w.clusters.get("b").has_namespace("xr-app-a"));
}

TEST_F(Federation, OffloadPodCapacityArithmetic) {
  peer(w, "a", "b", PeeringMode::kUnidirectional);
  w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kBoth);
  auto& a = w.clusters.get("a");
  a.create_pod("xr-app", "one", Resources{1000, 512});
  const auto shadow = w.peering.offload_pod("a", "xr-app", "one", "vk-b");
  EXPECT_EQ(shadow.incarnation_cluster, "b");
  const auto* vn = w.peering.virtual_nodes("a")[0];
  EXPECT_EQ(vn->free().millicpu, 1000);
  const auto* inc = w.clusters.get("b").find_pod("xr-app", "one");
  ASSERT_NE(inc, nullptr);
  EXPECT_EQ(inc->status, PodStatus::kRunning);
  EXPECT_TRUE(a.find_pod("xr-app", "one")->shadow);

  a.create_pod("xr-app", "big", Resources{3000, 512});
  EXPECT_EQ(code_of([&] { w.peering.offload_pod("a", "xr-app", "big", "vk-b"); }),
            ErrorCode::kInsufficientCapacity);
  EXPECT_EQ(code_of([&] { w.peering.offload_pod("a", "xr-app", "ghost", "vk-b"); }), ErrorCode::kNoSuchPod);
}

TEST_F(Federation, ShadowCatchesUpWithinOneSyncTick) {
  peer(w, "a", "b", PeeringMode::kUnidirectional);
  w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kPods);
  w.clusters.get("a").create_pod("xr-app", "p", Resources{100, 64});
  w.peering.offload_pod("a", "xr-app", "p", "vk-b");
  settle(w.peering.profile().sync_tick_ms);
  EXPECT_EQ(w.clusters.get("a").find_pod("xr-app", "p")->status, PodStatus::kRunning);
}

TEST_F(Federation, ServicesOnlyPolicyKeepsPodsHome) {
  peer(w, "a", "b", PeeringMode::kUnidirectional);
  w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kServices);
  w.clusters.get("a").create_pod("xr-app", "p", Resources{100, 64});
  EXPECT_EQ(code_of([&] { w.peering.offload_pod("a", "xr-app", "p", "vk-b"); }), ErrorCode::kPolicyForbids);
}

TEST_F(Federation, ReflectedServiceResolvesThroughTunnel) {
  const auto id = peer(w, "a", "b");
  w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kServices);
  auto& a = w.clusters.get("a");
  const auto ep = a.allocate_pod_address();
  a.upsert_service(Service{"streaming", "xr-app", {ep}, {}});
  const auto r = w.peering.reflect_service("a", "xr-app", "streaming", id);
  ASSERT_EQ(r.remote_addresses.size(), 1u);
  const auto tunnel = *w.peering.session(id).tunnel;
  const auto dir = w.network.tunnel(tunnel).a == "a" ? TunnelDirection::kAToB : TunnelDirection::kBToA;
  EXPECT_EQ(r.remote_addresses[0], w.network.translate_address(tunnel, dir, ep));
  EXPECT_EQ(r.remote_addresses[0], w.network.view_of("b", "a", ep));
  const auto* copy = w.clusters.get("b").find_service("xr-app", "streaming");
  ASSERT_NE(copy, nullptr);
  EXPECT_EQ(copy->reflected_from, "a");

  a.upsert_service(Service{"empty", "xr-app", {}, {}});
  EXPECT_TRUE(w.peering.reflect_service("a", "xr-app", "empty", id).remote_addresses.empty());
  EXPECT_EQ(code_of([&] { w.peering.reflect_service("a", "xr-app", "nope", id); }), ErrorCode::kNoSuchService);
}

TEST_F(Federation, ReflectionPolicyTable) {
  for (auto policy : {OffloadPolicy::kPods, OffloadPolicy::kServices, OffloadPolicy::kBoth}) {
    World fresh(3, instant_profile());
    add_ready(fresh, spec("a", 1, "10.42.0.0/16"));
    add_ready(fresh, spec("b", 1, "10.43.0.0/16", {}));
    fresh.network.add_link("a", "b", Distribution::constant(1), 1000, 0);
    const auto id = peer(fresh, "a", "b");
    fresh.peering.offload_namespace("a", "xr-app", {"b"}, policy);
    fresh.clusters.get("a").upsert_service(Service{"s", "xr-app", {}, {}});
    const bool allowed = policy != OffloadPolicy::kPods;
    if (allowed) {
      EXPECT_NO_THROW(fresh.peering.reflect_service("a", "xr-app", "s", id));
    } else {
      EXPECT_EQ(code_of([&] { fresh.peering.reflect_service("a", "xr-app", "s", id); }),
                ErrorCode::kPolicyForbids);
    }
  }
}

TEST_F(Federation, TeardownRemovesVirtualNodes) {
  const auto id = peer(w, "a", "b");
  w.peering.teardown_peering(id);
  for (const auto& vn : w.peering.all_virtual_nodes()) EXPECT_NE(vn.session, id);
  EXPECT_TRUE(w.peering.all_virtual_nodes().empty());
  EXPECT_FALSE(w.network.active_tunnel_between("a", "b"));
  EXPECT_EQ(code_of([&] { w.peering.teardown_peering(id); }), ErrorCode::kNoSuchSession);
  EXPECT_TRUE(w.peering.check_invariants().empty());
}

TEST_F(Federation, TeardownEvictsOffloadedPods) {
  const auto id = peer(w, "a", "b", PeeringMode::kUnidirectional);
  w.peering.offload_namespace("a", "xr-app", {"b"}, OffloadPolicy::kBoth);
  auto& a = w.clusters.get("a");
  for (const char* name : {"p1", "p2"}) {
    a.create_pod("xr-app", name, Resources{500, 256});
    w.peering.offload_pod("a", "xr-app", name, "vk-b");
  }
  settle(1000);
  w.peering.teardown_peering(id);
  for (const char* name : {"p1", "p2"}) {
    const auto* p = a.find_pod("xr-app", name);
    ASSERT_NE(p, nullptr);
    EXPECT_EQ(p->status, PodStatus::kPending);
    EXPECT_TRUE(p->node.empty());
    EXPECT_FALSE(p->shadow);
  }
  const auto& dead = w.peering.terminated_incarnations();
  ASSERT_EQ(dead.size(), 2u);
  for (const auto& p : dead) EXPECT_EQ(p.status, PodStatus::kTerminated);
  for (const auto& [key, p] : w.clusters.get("b").pods()) EXPECT_NE(p.origin_cluster, "a") << key;
  EXPECT_FALSE(w.clusters.get("b").has_namespace("xr-app"));
  EXPECT_TRUE(w.peering.check_invariants().empty());
}

TEST_F(Federation, TeardownDuringHandshake) {
  const auto id = w.peering.initiate_peering("a", "b", PeeringMode::kBidirectional);
  settle(250);
  ASSERT_EQ(w.peering.session(id).state, SessionState::kAuthenticating);
  w.peering.teardown_peering(id);
  settle(2000);
  EXPECT_EQ(w.peering.session(id).state, SessionState::kTornDown);
  EXPECT_TRUE(w.peering.all_virtual_nodes().empty());
  EXPECT_FALSE(w.network.active_tunnel_between("a", "b"));
}
