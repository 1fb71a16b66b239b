#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fedsim/federation/peering.hpp"
#include "fedsim/lifecycle/cluster_manager.hpp"
#include "fedsim/net/network.hpp"
#include "fedsim/sched/scheduler.hpp"
#include "fedsim/sim/engine.hpp"

namespace fedsim {

struct WorldProfile {
  std::map<KubeDistribution, ProviderProfile> providers;
  NetworkProfile network;
  FederationProfile federation;
};

// Everything one simulation run owns. Not shareable across threads; run
// several Worlds side by side instead.
class World {
 public:
  World(std::uint64_t seed, WorldProfile profile);

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  // Applies the cluster to the management plane and registers its pod CIDR
  // with the network.
  std::string add_cluster(ClusterSpec spec);
  // Runs the engine in `step_ms` increments until every cluster is Ready or
  // `deadline` passes; returns whether all became Ready.
  bool run_until_ready(SimTime deadline, std::uint64_t step_ms = 1000);

  Engine engine;
  ClusterManager clusters;
  Network network;
  PeeringManager peering;
  Scheduler scheduler;
};

}  // namespace fedsim
