#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedsim/net/ipv4.hpp"
#include "fedsim/sim/distribution.hpp"
#include "fedsim/sim/engine.hpp"

namespace fedsim {

enum class Transport { kDatagram, kStream };
enum class Exposure { kOverlayTunnel, kNodePort, kL7Proxy };

std::string_view to_string(Transport t);
std::string_view to_string(Exposure e);
std::optional<Exposure> parse_exposure(std::string_view text);

struct NetworkProfile {
  // Same-cluster pod-to-pod hop.
  Distribution local_latency_ms = Distribution::constant(0.3);
  double local_bandwidth_mbps = 10000.0;
  double tunnel_overhead_ms = 1.0;
  std::int64_t tunnel_overhead_millicpu = 42;
  // Extra per-traversal cost of the node-port path (kube-proxy forwarding).
  double node_port_penalty_ms = 11.0;
  // Added once on each side of an L7 sidecar hop.
  double l7_proxy_delay_ms = 2.0;
  Ipv4Prefix translation_pool = *Ipv4Prefix::parse("10.64.0.0/10");
  int max_stream_retransmits = 16;

  bool operator==(const NetworkProfile&) const = default;
};

using LinkId = std::uint32_t;
using TunnelId = std::uint32_t;

struct Link {
  LinkId id = 0;
  std::string a;
  std::string b;
  Distribution one_way_latency_ms;
  double bandwidth_mbps = 1000.0;
  double loss_rate = 0.0;
};

// Translated prefix under which one side's pod CIDR is visible to the peer.
struct PrefixRemap {
  Ipv4Prefix origin;
  Ipv4Prefix translated;
};

// kAToB rewrites addresses of cluster `a` into the view cluster `b` has of
// them; kBToA the other way round.
enum class TunnelDirection { kAToB, kBToA };

struct Tunnel {
  TunnelId id = 0;
  std::uint64_t session = 0;
  LinkId link = 0;
  std::string a;
  std::string b;
  PrefixRemap a_remap;
  PrefixRemap b_remap;
  double overhead_ms = 0.0;
  std::int64_t overhead_millicpu = 0;
  bool active = true;

  const PrefixRemap& remap(TunnelDirection dir) const {
    return dir == TunnelDirection::kAToB ? a_remap : b_remap;
  }
};

struct Endpoint {
  std::string cluster;
  Ipv4Address address;  // native pod address inside `cluster`
  bool operator==(const Endpoint&) const = default;
};

struct FlowRecord {
  Endpoint src;
  Endpoint dst;
  Transport transport = Transport::kStream;
  Exposure exposure = Exposure::kOverlayTunnel;
  std::int64_t payload_bytes = 1;
};

struct Hop {
  std::string label;
  std::uint64_t delay_ms = 0;
  bool operator==(const Hop&) const = default;
};

struct DeliveryRecord {
  SimTime sent_at;
  std::optional<SimTime> delivered_at;  // nullopt: dropped
  std::vector<Hop> path;
  std::optional<TunnelId> tunnel;
  Ipv4Address dst_seen;  // destination address as addressed by the sender
  std::uint32_t retransmits = 0;

  bool dropped() const { return !delivered_at.has_value(); }
  std::uint64_t latency_ms() const { return delivered_at ? *delivered_at - sent_at : 0; }
};

class Network {
 public:
  Network(Engine& engine, NetworkProfile profile);

  const NetworkProfile& profile() const { return profile_; }

  void register_cluster(const std::string& name, Ipv4Prefix pod_cidr);
  bool has_cluster(std::string_view name) const;
  Ipv4Prefix pod_cidr(std::string_view cluster) const;
  // Public node address used by node-port and L7-gateway exposure.
  Ipv4Address node_address(std::string_view cluster) const;

  LinkId add_link(const std::string& a, const std::string& b, Distribution one_way_latency_ms,
                  double bandwidth_mbps, double loss_rate);
  const Link* find_link(std::string_view a, std::string_view b) const;
  const std::vector<Link>& links() const { return links_; }

  // Caller (the peering layer) guarantees the owning session is at least
  // Authenticating.
  TunnelId establish_tunnel(std::uint64_t session, const std::string& a, const std::string& b);
  void close_tunnel(TunnelId id);
  const Tunnel& tunnel(TunnelId id) const;
  bool tunnel_active(TunnelId id) const;
  std::optional<TunnelId> active_tunnel_between(std::string_view a, std::string_view b) const;
  int active_tunnel_endpoints(std::string_view cluster) const;

  Ipv4Address translate_address(TunnelId id, TunnelDirection dir, Ipv4Address addr) const;
  Ipv4Address reverse_translate(TunnelId id, TunnelDirection dir, Ipv4Address translated) const;

  // How `viewer` addresses a pod living at native address `addr` in
  // `owner`; requires an active tunnel when the clusters differ.
  Ipv4Address view_of(std::string_view viewer, std::string_view owner, Ipv4Address addr) const;

  DeliveryRecord transmit(const FlowRecord& flow);

  // Every cluster CIDR followed by every active translated prefix.
  std::vector<Ipv4Prefix> translated_prefixes() const;
  std::vector<Ipv4Prefix> cluster_cidrs() const;
  // Empty when all overlay invariants hold.
  std::vector<std::string> check_invariants() const;

 private:
  struct ClusterNet {
    Ipv4Prefix pod_cidr;
    Ipv4Address node_address;
  };

  const ClusterNet& cluster(std::string_view name) const;
  Ipv4Prefix allocate_prefix(std::uint8_t length, const std::vector<Ipv4Prefix>& extra) const;
  std::uint64_t hop_delay(const Distribution& latency, double bandwidth_mbps,
                          std::int64_t payload_bytes);
  static std::uint64_t quantize(double ms);

  Engine& engine_;
  NetworkProfile profile_;
  Rng rng_;
  std::map<std::string, ClusterNet, std::less<>> clusters_;
  std::vector<Link> links_;
  std::vector<Tunnel> tunnels_;
};

}  // namespace fedsim
