#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/lifecycle/cluster.hpp"
#include "fedsim/sim/engine.hpp"

namespace fedsim {

// Management-cluster role: accepts declarative cluster definitions and
// reconciles each one through the provisioning phases on the engine clock.
//
// Timing model per cluster (all draws from the provider profile):
//   ProvisioningInfra          max over nodes of vm_create
//   BootstrappingControlPlane  cp_bootstrap
//   BootstrappingWorkers       max over nodes of (bootstrap + readiness_check),
//                              where the control plane contributes only its check
// so worker bootstrap is concurrent and total time grows sub-linearly in size.
class ClusterManager {
 public:
  using ReadyCallback = std::function<void(const ClusterState&)>;

  ClusterManager(Engine& engine, std::map<KubeDistribution, ProviderProfile> profiles);

  ClusterSpec generate_cluster_definition(KubeDistribution distribution, int node_count,
                                          Flavor flavor = {}, std::string region = "local");

  // Returns the cluster name, which is the handle used everywhere else.
  std::string apply_cluster(ClusterSpec spec);
  ClusterPhase reconcile(std::string_view cluster);
  ProvisionReport provisioning_report(std::string_view cluster) const;

  bool contains(std::string_view cluster) const { return clusters_.contains(cluster); }
  ClusterState& get(std::string_view cluster);
  const ClusterState& get(std::string_view cluster) const;
  // Throws NoSuchCluster / NotReady.
  ClusterState& require_ready(std::string_view cluster);
  std::vector<std::string> names() const;
  bool all_ready() const;

  void on_ready(ReadyCallback cb) { ready_callbacks_.push_back(std::move(cb)); }

  const ProviderProfile& profile(KubeDistribution d) const;

 private:
  void schedule_tick(ClusterState& state);
  Rng& rng_for(const std::string& cluster);

  Engine& engine_;
  std::map<KubeDistribution, ProviderProfile> profiles_;
  std::map<std::string, std::unique_ptr<ClusterState>, std::less<>> clusters_;
  std::map<std::string, Rng, std::less<>> rngs_;
  std::vector<ReadyCallback> ready_callbacks_;
  int generated_ = 0;
};

}  // namespace fedsim
