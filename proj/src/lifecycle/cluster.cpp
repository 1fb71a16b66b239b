#include "fedsim/lifecycle/cluster.hpp"

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

std::string_view to_string(KubeDistribution d) {
  return d == KubeDistribution::kKubeadm ? "kubeadm-like" : "k3s-like";
}

std::optional<KubeDistribution> parse_kube_distribution(std::string_view text) {
  if (text == "kubeadm-like" || text == "kubeadm") return KubeDistribution::kKubeadm;
  if (text == "k3s-like" || text == "k3s") return KubeDistribution::kK3s;
  return std::nullopt;
}

std::string_view to_string(ClusterPhase p) {
  switch (p) {
    case ClusterPhase::kPending: return "Pending";
    case ClusterPhase::kProvisioningInfra: return "ProvisioningInfra";
    case ClusterPhase::kBootstrappingControlPlane: return "BootstrappingControlPlane";
    case ClusterPhase::kBootstrappingWorkers: return "BootstrappingWorkers";
    case ClusterPhase::kReady: return "Ready";
    case ClusterPhase::kFailed: return "Failed";
  }
  return "Unknown";
}

std::string_view to_string(PodStatus s) {
  switch (s) {
    case PodStatus::kPending: return "Pending";
    case PodStatus::kRunning: return "Running";
    case PodStatus::kTerminated: return "Terminated";
  }
  return "Unknown";
}

void validate(const ClusterSpec& spec) {
  if (spec.name.empty()) fail(ErrorCode::kConfigError, "name");
  if (spec.node_count < 1) fail(ErrorCode::kInvalidSize, fmt::format("node_count={}", spec.node_count));
  if (spec.flavor.vcpus <= 0 || spec.flavor.ram_mb <= 0 || spec.flavor.disk_gb <= 0) {
    fail(ErrorCode::kConfigError, "flavor");
  }
  if (spec.pod_cidr.length == 0 || spec.pod_cidr.length > 24) {
    fail(ErrorCode::kConfigError, fmt::format("pod_cidr {} must have length 1..24", spec.pod_cidr.str()));
  }
}

ClusterState::ClusterState(ClusterSpec spec, SimTime applied_at)
    : spec_(std::move(spec)), applied_at_(applied_at), phase_deadline_(applied_at) {
  const Resources per_node{static_cast<std::int64_t>(spec_.flavor.vcpus) * 1000, spec_.flavor.ram_mb};
  nodes_.push_back(Node{"cp-0", NodeRole::kControlPlane, per_node, {}});
  for (int i = 1; i < spec_.node_count; ++i) {
    nodes_.push_back(Node{fmt::format("worker-{}", i), NodeRole::kWorker, per_node, {}});
  }
  create_namespace(NamespaceInfo{"default", {}, {}});
  for (const auto& ns : spec_.namespaces) {
    if (!has_namespace(ns)) create_namespace(NamespaceInfo{ns, {}, {}});
  }
}

Node* ClusterState::find_node(std::string_view id) {
  for (auto& n : nodes_) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

Resources ClusterState::capacity() const {
  Resources r;
  for (const auto& n : nodes_) r += n.capacity;
  return r;
}

Resources ClusterState::free_capacity() const {
  Resources r;
  for (const auto& n : nodes_) r += n.free();
  return r;
}

void ClusterState::create_namespace(NamespaceInfo info) {
  const std::string name = info.name;
  namespaces_.insert_or_assign(name, std::move(info));
}

void ClusterState::delete_namespace(std::string_view ns) {
  auto it = namespaces_.find(ns);
  if (it != namespaces_.end()) namespaces_.erase(it);
}

std::string ClusterState::key(std::string_view ns, std::string_view name) {
  return fmt::format("{}/{}", ns, name);
}

Pod& ClusterState::create_pod(std::string ns, std::string name, Resources request) {
  if (!has_namespace(ns)) fail(ErrorCode::kNoSuchNamespace, fmt::format("{}/{}", spec_.name, ns));
  const auto k = key(ns, name);
  if (pods_.contains(k)) fail(ErrorCode::kDuplicateName, fmt::format("pod {}", k));
  Pod pod;
  pod.name = std::move(name);
  pod.ns = std::move(ns);
  pod.request = request;
  return pods_.emplace(k, std::move(pod)).first->second;
}

Pod* ClusterState::find_pod(std::string_view ns, std::string_view name) {
  auto it = pods_.find(key(ns, name));
  return it == pods_.end() ? nullptr : &it->second;
}

const Pod* ClusterState::find_pod(std::string_view ns, std::string_view name) const {
  auto it = pods_.find(key(ns, name));
  return it == pods_.end() ? nullptr : &it->second;
}

void ClusterState::erase_pod(std::string_view ns, std::string_view name) {
  auto it = pods_.find(key(ns, name));
  if (it != pods_.end()) pods_.erase(it);
}

Service& ClusterState::upsert_service(Service svc) {
  if (!has_namespace(svc.ns)) fail(ErrorCode::kNoSuchNamespace, fmt::format("{}/{}", spec_.name, svc.ns));
  const auto k = key(svc.ns, svc.name);
  return services_.insert_or_assign(k, std::move(svc)).first->second;
}

Service* ClusterState::find_service(std::string_view ns, std::string_view name) {
  auto it = services_.find(key(ns, name));
  return it == services_.end() ? nullptr : &it->second;
}

void ClusterState::erase_service(std::string_view ns, std::string_view name) {
  auto it = services_.find(key(ns, name));
  if (it != services_.end()) services_.erase(it);
}

Ipv4Address ClusterState::allocate_pod_address() {
  if (next_host_ + 1 >= spec_.pod_cidr.size()) {
    fail(ErrorCode::kInsufficientCapacity, fmt::format("pod CIDR {} exhausted", spec_.pod_cidr.str()));
  }
  return spec_.pod_cidr.with_host(next_host_++);
}

}  // namespace fedsim
