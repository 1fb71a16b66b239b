#pragma once

#include <map>
#include <string>

#include <gtest/gtest.h>

#include "fedsim/world.hpp"

namespace fedsim::testing {

inline ProviderProfile constant_provider(KubeDistribution d, double vm, double cp, double worker, double check) {
  return ProviderProfile{d, Distribution::constant(vm), Distribution::constant(cp), Distribution::constant(worker),
                         Distribution::constant(check)};
}

inline std::map<KubeDistribution, ProviderProfile> instant_providers() {
  return {{KubeDistribution::kKubeadm, constant_provider(KubeDistribution::kKubeadm, 0, 0, 0, 0)},
          {KubeDistribution::kK3s, constant_provider(KubeDistribution::kK3s, 0, 0, 0, 0)}};
}

inline WorldProfile instant_profile() { return WorldProfile{instant_providers(), {}, {}}; }

inline ClusterSpec spec(std::string name, int nodes = 1, const char* cidr = "10.42.0.0/16",
                        std::vector<std::string> namespaces = {"xr-app"}) {
  ClusterSpec s;
  s.name = std::move(name);
  s.distribution = KubeDistribution::kK3s;
  s.node_count = nodes;
  s.pod_cidr = *Ipv4Prefix::parse(cidr);
  s.namespaces = std::move(namespaces);
  return s;
}

inline void add_ready(World& w, ClusterSpec s) {
  w.add_cluster(std::move(s));
  ASSERT_TRUE(w.run_until_ready(w.engine.now() + 3'600'000, 100));
}

// Runs the engine until the session settles in Established (or fails).
inline SessionId peer(World& w, const std::string& consumer, const std::string& provider,
                      PeeringMode mode = PeeringMode::kBidirectional) {
  const SessionId id = w.peering.initiate_peering(consumer, provider, mode);
  for (int i = 0; i < 1000 && w.peering.session(id).state != SessionState::kEstablished; ++i) {
    w.engine.run_until(w.engine.now() + 50);
  }
  EXPECT_EQ(w.peering.session(id).state, SessionState::kEstablished);
  return id;
}

}  // namespace fedsim::testing
