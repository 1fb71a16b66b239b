#include "fedsim/sched/scheduler.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

std::string PlacementPolicy::str() const {
  switch (kind) {
    case Kind::kLocalFirst: return "local-first";
    case Kind::kOffloadTarget: return fmt::format("offload-target({})", target);
    case Kind::kBalanced: return "balanced";
  }
  return "unknown";
}

Scheduler::Scheduler(ClusterManager& clusters, PeeringManager& peering)
    : clusters_(clusters), peering_(peering) {}

std::vector<NodeView> Scheduler::cluster_view(std::string_view cluster) const {
  const auto& st = clusters_.require_ready(cluster);
  std::vector<NodeView> out;
  for (const auto& n : st.nodes()) {
    out.push_back(NodeView{n.id, NodeKind::kPhysical, n.capacity, n.allocated, {}});
  }
  for (const auto* vn : peering_.virtual_nodes(cluster)) {
    out.push_back(NodeView{vn->id, NodeKind::kVirtual, vn->capacity, vn->allocated, vn->backing});
  }
  std::sort(out.begin(), out.end(), [](const NodeView& a, const NodeView& b) { return a.id < b.id; });
  return out;
}

bool Scheduler::virtual_eligible(std::string_view cluster, std::string_view ns,
                                 const VirtualNode& vn) const {
  if (ns.empty()) return false;
  const auto* off = peering_.find_offload(cluster, ns);
  return off != nullptr && off->targets_cluster(vn.backing) && allows_pods(off->policy);
}

Assignment Scheduler::select(const Resources& request, std::string_view cluster,
                             const PlacementPolicy& policy, std::string_view ns) const {
  const auto view = cluster_view(cluster);

  if (policy.kind == PlacementPolicy::Kind::kOffloadTarget &&
      !peering_.established(cluster, policy.target)) {
    fail(ErrorCode::kPolicyInfeasible, fmt::format("{} is not peered with {}", cluster, policy.target));
  }

  std::vector<const NodeView*> feasible;
  for (const auto& n : view) {
    if (!request.fits_within(n.free())) continue;
    if (n.kind == NodeKind::kVirtual) {
      const auto* vn = peering_.find_virtual_node(cluster, n.id);
      if (vn == nullptr || !virtual_eligible(cluster, ns, *vn)) continue;
    }
    switch (policy.kind) {
      case PlacementPolicy::Kind::kOffloadTarget:
        if (n.kind != NodeKind::kVirtual || n.backing_cluster != policy.target) continue;
        break;
      case PlacementPolicy::Kind::kLocalFirst:
      case PlacementPolicy::Kind::kBalanced:
        break;
    }
    feasible.push_back(&n);
  }
  if (feasible.empty()) {
    fail(ErrorCode::kUnschedulable,
         fmt::format("no node in {} fits {} under {}", cluster, request.str(), policy.str()));
  }

  // `view` is id-sorted, so the first match in each rule is the tie-break winner.
  const NodeView* chosen = nullptr;
  switch (policy.kind) {
    case PlacementPolicy::Kind::kLocalFirst: {
      auto it = std::find_if(feasible.begin(), feasible.end(),
                             [](const NodeView* n) { return n->kind == NodeKind::kPhysical; });
      chosen = it != feasible.end() ? *it : feasible.front();
      break;
    }
    case PlacementPolicy::Kind::kOffloadTarget:
      chosen = feasible.front();
      break;
    case PlacementPolicy::Kind::kBalanced:
      for (const auto* n : feasible) {
        if (chosen == nullptr || n->free().millicpu > chosen->free().millicpu) chosen = n;
      }
      break;
  }
  return Assignment{std::string(cluster), chosen->id, chosen->kind, chosen->backing_cluster};
}

Assignment Scheduler::schedule(const Resources& request, std::string_view cluster,
                               const PlacementPolicy& policy, std::string_view ns) {
  auto a = select(request, cluster, policy, ns);
  if (a.kind == NodeKind::kPhysical) {
    clusters_.get(cluster).find_node(a.node)->allocated += request;
  } else {
    peering_.find_virtual_node(cluster, a.node)->allocated += request;
  }
  return a;
}

Assignment Scheduler::bind_pod(std::string_view cluster, std::string_view ns, std::string_view pod_name,
                               const PlacementPolicy& policy) {
  auto& st = clusters_.require_ready(cluster);
  Pod* pod = st.find_pod(ns, pod_name);
  if (pod == nullptr) fail(ErrorCode::kNoSuchPod, fmt::format("{}/{}/{}", cluster, ns, pod_name));
  auto a = select(pod->request, cluster, policy, ns);
  if (a.kind == NodeKind::kPhysical) {
    st.find_node(a.node)->allocated += pod->request;
    pod->node = a.node;
    pod->status = PodStatus::kRunning;
    pod->address = st.allocate_pod_address();
  } else {
    peering_.offload_pod(std::string(cluster), std::string(ns), std::string(pod_name), a.node);
  }
  return a;
}

std::vector<std::string> Scheduler::check_invariants() const {
  std::vector<std::string> issues;
  for (const auto& name : clusters_.names()) {
    const auto& st = clusters_.get(name);
    for (const auto& n : st.nodes()) {
      if (!n.allocated.fits_within(n.capacity) || n.allocated.millicpu < 0 || n.allocated.ram_mb < 0) {
        issues.push_back(fmt::format("{}/{} allocated {} of {}", name, n.id, n.allocated.str(),
                                     n.capacity.str()));
      }
    }
    for (const auto* vn : peering_.virtual_nodes(name)) {
      if (!vn->allocated.fits_within(vn->capacity)) {
        issues.push_back(fmt::format("{}/{} allocated {} of {}", name, vn->id, vn->allocated.str(),
                                     vn->capacity.str()));
      }
    }
  }
  return issues;
}

}  // namespace fedsim
