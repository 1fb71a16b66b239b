#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/net/ipv4.hpp"
#include "fedsim/resources.hpp"
#include "fedsim/sim/distribution.hpp"
#include "fedsim/sim/time.hpp"

namespace fedsim {

enum class KubeDistribution { kKubeadm, kK3s };

std::string_view to_string(KubeDistribution d);
std::optional<KubeDistribution> parse_kube_distribution(std::string_view text);

struct Flavor {
  int vcpus = 2;
  std::int64_t ram_mb = 4096;
  int disk_gb = 20;
  bool operator==(const Flavor&) const = default;
};

struct ClusterSpec {
  std::string name;
  KubeDistribution distribution = KubeDistribution::kKubeadm;
  int node_count = 1;
  Flavor flavor;
  std::string region = "local";
  Ipv4Prefix pod_cidr;
  // Namespaces present from creation.
  std::vector<std::string> namespaces;

  int worker_count() const { return node_count - 1; }
  bool operator==(const ClusterSpec&) const = default;
};

// Throws ConfigError naming the first violated constraint.
void validate(const ClusterSpec& spec);

enum class ClusterPhase {
  kPending,
  kProvisioningInfra,
  kBootstrappingControlPlane,
  kBootstrappingWorkers,
  kReady,
  kFailed,
};

std::string_view to_string(ClusterPhase p);

// Durations in seconds.
struct ProviderProfile {
  KubeDistribution distribution = KubeDistribution::kKubeadm;
  Distribution vm_create;
  Distribution cp_bootstrap;
  Distribution worker_bootstrap;
  Distribution readiness_check;
  bool operator==(const ProviderProfile&) const = default;
};

struct ProvisionReport {
  std::string cluster;
  SimTime cp_ready_at;
  SimTime all_ready_at;
  bool operator==(const ProvisionReport&) const = default;
};

enum class NodeRole { kControlPlane, kWorker };

struct Node {
  std::string id;
  NodeRole role = NodeRole::kWorker;
  Resources capacity;
  Resources allocated;

  Resources free() const { return capacity - allocated; }
};

enum class PodStatus { kPending, kRunning, kTerminated };
std::string_view to_string(PodStatus s);

struct Pod {
  std::string name;
  std::string ns;
  Resources request;
  PodStatus status = PodStatus::kPending;
  std::string node;  // empty while unbound
  Ipv4Address address;

  // Origin-side view of a pod whose execution moved to a peer.
  bool shadow = false;
  std::string incarnation_cluster;
  SimTime last_sync;

  // Set on a remote incarnation: the cluster whose shadow it backs.
  std::string origin_cluster;
};

struct Service {
  std::string name;
  std::string ns;
  std::vector<Ipv4Address> endpoints;
  // Non-empty for a reflected copy in a twin namespace.
  std::string reflected_from;
};

struct NamespaceInfo {
  std::string name;
  // Non-empty when this namespace is a twin created by an offload.
  std::string twin_of_cluster;
  std::string twin_of_namespace;
};

// Runtime state of one workload cluster: lifecycle bookkeeping plus the
// small object store (nodes, namespaces, pods, services) other modules use.
class ClusterState {
 public:
  ClusterState(ClusterSpec spec, SimTime applied_at);

  const ClusterSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  ClusterPhase phase() const { return phase_; }
  bool ready() const { return phase_ == ClusterPhase::kReady; }
  const std::vector<ClusterPhase>& phase_history() const { return history_; }
  SimTime applied_at() const { return applied_at_; }

  std::vector<Node>& nodes() { return nodes_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  Node* find_node(std::string_view id);
  Resources capacity() const;
  Resources free_capacity() const;

  bool has_namespace(std::string_view ns) const { return namespaces_.contains(ns); }
  const std::map<std::string, NamespaceInfo, std::less<>>& namespaces() const { return namespaces_; }
  void create_namespace(NamespaceInfo info);
  void delete_namespace(std::string_view ns);

  Pod& create_pod(std::string ns, std::string name, Resources request);
  Pod* find_pod(std::string_view ns, std::string_view name);
  const Pod* find_pod(std::string_view ns, std::string_view name) const;
  std::map<std::string, Pod, std::less<>>& pods() { return pods_; }
  const std::map<std::string, Pod, std::less<>>& pods() const { return pods_; }
  void erase_pod(std::string_view ns, std::string_view name);

  Service& upsert_service(Service svc);
  Service* find_service(std::string_view ns, std::string_view name);
  void erase_service(std::string_view ns, std::string_view name);
  const std::map<std::string, Service, std::less<>>& services() const { return services_; }

  Ipv4Address allocate_pod_address();

  static std::string key(std::string_view ns, std::string_view name);

 private:
  friend class ClusterManager;

  ClusterSpec spec_;
  SimTime applied_at_;
  ClusterPhase phase_ = ClusterPhase::kPending;
  std::vector<ClusterPhase> history_{ClusterPhase::kPending};
  SimTime phase_deadline_;
  std::optional<SimTime> cp_ready_at_;
  std::optional<SimTime> all_ready_at_;

  std::vector<Node> nodes_;
  std::map<std::string, NamespaceInfo, std::less<>> namespaces_;
  std::map<std::string, Pod, std::less<>> pods_;
  std::map<std::string, Service, std::less<>> services_;
  std::uint32_t next_host_ = 2;
};

}  // namespace fedsim
