#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/lifecycle/cluster_manager.hpp"
#include "fedsim/net/network.hpp"
#include "fedsim/resources.hpp"
#include "fedsim/sim/distribution.hpp"
#include "fedsim/sim/engine.hpp"

namespace fedsim {

enum class PeeringMode { kUnidirectional, kBidirectional };
enum class SessionState { kDiscovered, kAuthenticating, kEstablished, kTornDown };
enum class OffloadPolicy { kPods, kServices, kBoth };

std::string_view to_string(PeeringMode m);
std::string_view to_string(SessionState s);
std::string_view to_string(OffloadPolicy p);
std::optional<PeeringMode> parse_peering_mode(std::string_view text);
std::optional<OffloadPolicy> parse_offload_policy(std::string_view text);

inline bool allows_pods(OffloadPolicy p) { return p != OffloadPolicy::kServices; }
inline bool allows_services(OffloadPolicy p) { return p != OffloadPolicy::kPods; }

using SessionId = std::uint64_t;

// `consumer` gets a virtual node backed by `provider`; bidirectional
// sessions also materialise the mirror image.
struct PeeringSession {
  SessionId id = 0;
  std::string consumer;
  std::string provider;
  PeeringMode mode = PeeringMode::kBidirectional;
  SessionState state = SessionState::kDiscovered;
  std::string consumer_token;
  std::string provider_token;
  bool consumer_verified = false;
  bool provider_verified = false;
  std::optional<TunnelId> tunnel;
  std::string failure;

  bool involves(std::string_view c) const { return consumer == c || provider == c; }
  const std::string& other(std::string_view c) const { return consumer == c ? provider : consumer; }
};

struct ResourceOffer {
  std::string from;
  Resources amount;
  double share = 1.0;
};

struct VirtualNode {
  std::string id;
  std::string host;
  std::string backing;
  Resources capacity;
  Resources allocated;
  SessionId session = 0;

  Resources free() const { return capacity - allocated; }
};

struct NamespaceOffload {
  std::string ns;
  std::string origin;
  std::vector<std::string> targets;
  OffloadPolicy policy = OffloadPolicy::kBoth;
  std::map<std::string, std::string> twins;  // target -> twin namespace

  bool targets_cluster(std::string_view c) const;
};

struct ShadowPod {
  std::string local_name;
  std::string ns;
  std::string origin;
  std::string incarnation_cluster;
  PodStatus status = PodStatus::kPending;
  SimTime last_sync;
};

struct ReflectedService {
  std::string service;
  std::string ns;
  std::string origin;
  std::string target;
  std::string target_ns;
  std::vector<Ipv4Address> remote_addresses;
  SessionId session = 0;
};

struct FederationProfile {
  Distribution discovery_ms = Distribution::constant(200.0);
  Distribution auth_ms = Distribution::constant(300.0);
  std::uint64_t sync_tick_ms = 500;
  double default_share = 0.5;

  bool operator==(const FederationProfile&) const = default;
};

class PeeringManager {
 public:
  PeeringManager(Engine& engine, ClusterManager& clusters, Network& network,
                 FederationProfile profile);

  const FederationProfile& profile() const { return profile_; }

  SessionId initiate_peering(const std::string& consumer, const std::string& provider,
                             PeeringMode mode);
  void teardown_peering(SessionId id);
  const PeeringSession& session(SessionId id) const;
  std::optional<SessionId> session_between(std::string_view a, std::string_view b) const;
  std::vector<const PeeringSession*> sessions() const;
  bool established(std::string_view a, std::string_view b) const;

  // Takes effect for existing virtual nodes at the next sync tick and for
  // any later peering immediately.
  ResourceOffer advertise_resources(const std::string& provider, double share);
  double share_of(std::string_view provider) const;

  const NamespaceOffload& offload_namespace(const std::string& origin, const std::string& ns,
                                            const std::vector<std::string>& targets,
                                            OffloadPolicy policy);
  void unoffload_namespace(const std::string& origin, const std::string& ns);
  const NamespaceOffload* find_offload(std::string_view origin, std::string_view ns) const;

  ShadowPod offload_pod(const std::string& origin, const std::string& ns, const std::string& pod,
                        const std::string& vnode_id);
  ReflectedService reflect_service(const std::string& origin, const std::string& ns,
                                   const std::string& service, SessionId session);
  const std::vector<ReflectedService>& reflected_services() const { return reflections_; }

  std::vector<const VirtualNode*> virtual_nodes(std::string_view host) const;
  VirtualNode* find_virtual_node(std::string_view host, std::string_view id);
  const std::vector<VirtualNode>& all_virtual_nodes() const { return vnodes_; }

  // Where `pod` in `origin` actually executes right now, if anywhere.
  std::optional<Endpoint> execution_endpoint(std::string_view origin, std::string_view ns,
                                             std::string_view pod) const;
  std::uint64_t sync_ticks() const { return sync_ticks_; }
  // Remote incarnations evicted by teardown, in eviction order.
  const std::vector<Pod>& terminated_incarnations() const { return terminated_; }

  // Empty when every federation invariant holds.
  std::vector<std::string> check_invariants() const;

 private:
  void on_discovered(SessionId id);
  void on_authenticated(SessionId id);
  void materialize_virtual_node(const PeeringSession& s, const std::string& host,
                                const std::string& backing);
  ResourceOffer compute_offer(const std::string& provider, double share) const;
  void evict(VirtualNode& vn);
  void withdraw_twin(NamespaceOffload& off, const std::string& target);
  void ensure_sync_running();
  void sync_tick();
  PeeringSession& mutable_session(SessionId id);
  std::string issue_token(const std::string& cluster, SessionId id) const;

  Engine& engine_;
  ClusterManager& clusters_;
  Network& network_;
  FederationProfile profile_;
  Rng rng_;

  std::map<SessionId, PeeringSession> sessions_;
  SessionId next_session_ = 1;
  std::vector<VirtualNode> vnodes_;
  std::map<std::string, NamespaceOffload, std::less<>> offloads_;  // "origin/ns"
  std::vector<ReflectedService> reflections_;
  std::map<std::string, double, std::less<>> shares_;
  std::map<std::string, ResourceOffer, std::less<>> pending_offers_;
  std::vector<Pod> terminated_;
  bool sync_running_ = false;
  std::uint64_t sync_ticks_ = 0;
};

}  // namespace fedsim
