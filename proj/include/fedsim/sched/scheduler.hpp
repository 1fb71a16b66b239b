#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/federation/peering.hpp"
#include "fedsim/lifecycle/cluster_manager.hpp"
#include "fedsim/resources.hpp"

namespace fedsim {

enum class NodeKind { kPhysical, kVirtual };

struct NodeView {
  std::string id;
  NodeKind kind = NodeKind::kPhysical;
  Resources capacity;
  Resources allocated;
  std::string backing_cluster;  // virtual only

  Resources free() const { return capacity - allocated; }
};

struct PlacementPolicy {
  enum class Kind { kLocalFirst, kOffloadTarget, kBalanced };

  Kind kind = Kind::kLocalFirst;
  std::string target;  // kOffloadTarget only

  static PlacementPolicy local_first() { return {Kind::kLocalFirst, {}}; }
  static PlacementPolicy offload_target(std::string cluster) {
    return {Kind::kOffloadTarget, std::move(cluster)};
  }
  static PlacementPolicy balanced() { return {Kind::kBalanced, {}}; }

  std::string str() const;
};

struct Assignment {
  std::string cluster;
  std::string node;
  NodeKind kind = NodeKind::kPhysical;
  std::string backing_cluster;
};

// Cross-cluster placement over a cluster's physical nodes plus the virtual
// nodes peering has materialised in it.
class Scheduler {
 public:
  Scheduler(ClusterManager& clusters, PeeringManager& peering);

  // Sorted by node id.
  std::vector<NodeView> cluster_view(std::string_view cluster) const;

  // Pure decision; does not reserve anything. Virtual nodes are eligible
  // only when `ns` is offloaded toward their backing cluster with a policy
  // that moves pods.
  Assignment select(const Resources& request, std::string_view cluster, const PlacementPolicy& policy,
                    std::string_view ns = {}) const;

  // select() plus reservation of the request on the chosen node.
  Assignment schedule(const Resources& request, std::string_view cluster,
                      const PlacementPolicy& policy, std::string_view ns = {});

  // Binds an existing Pending pod: physical placement starts it locally,
  // virtual placement offloads it through peering.
  Assignment bind_pod(std::string_view cluster, std::string_view ns, std::string_view pod,
                      const PlacementPolicy& policy);

  // Empty when no node, physical or virtual, is overcommitted.
  std::vector<std::string> check_invariants() const;

 private:
  bool virtual_eligible(std::string_view cluster, std::string_view ns, const VirtualNode& vn) const;

  ClusterManager& clusters_;
  PeeringManager& peering_;
};

}  // namespace fedsim
