#include "fedsim/net/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

std::string_view to_string(Transport t) {
  return t == Transport::kDatagram ? "datagram" : "stream";
}

std::string_view to_string(Exposure e) {
  switch (e) {
    case Exposure::kOverlayTunnel: return "overlay-tunnel";
    case Exposure::kNodePort: return "node-port";
    case Exposure::kL7Proxy: return "l7-proxy";
  }
  return "unknown";
}

std::optional<Exposure> parse_exposure(std::string_view text) {
  if (text == "overlay-tunnel") return Exposure::kOverlayTunnel;
  if (text == "node-port") return Exposure::kNodePort;
  if (text == "l7-proxy") return Exposure::kL7Proxy;
  return std::nullopt;
}

Network::Network(Engine& engine, NetworkProfile profile)
    : engine_(engine), profile_(std::move(profile)), rng_(engine.rng("overlay-net")) {}

void Network::register_cluster(const std::string& name, Ipv4Prefix pod_cidr) {
  if (clusters_.contains(name)) fail(ErrorCode::kDuplicateName, name);
  // Node addresses live outside pod space: 192.168.<n>.10, one /24 per cluster.
  const auto index = static_cast<std::uint32_t>(clusters_.size() + 1);
  const Ipv4Address node{(192u << 24) | (168u << 16) | ((index & 0xff) << 8) | 10u};
  clusters_.emplace(name, ClusterNet{pod_cidr, node});
}

bool Network::has_cluster(std::string_view name) const { return clusters_.contains(name); }

const Network::ClusterNet& Network::cluster(std::string_view name) const {
  auto it = clusters_.find(name);
  if (it == clusters_.end()) fail(ErrorCode::kNoSuchCluster, std::string(name));
  return it->second;
}

Ipv4Prefix Network::pod_cidr(std::string_view c) const { return cluster(c).pod_cidr; }
Ipv4Address Network::node_address(std::string_view c) const { return cluster(c).node_address; }

LinkId Network::add_link(const std::string& a, const std::string& b, Distribution one_way_latency_ms,
                         double bandwidth_mbps, double loss_rate) {
  if (a == b) fail(ErrorCode::kSelfLink, a);
  cluster(a);
  cluster(b);
  if (find_link(a, b) != nullptr) fail(ErrorCode::kDuplicateLink, fmt::format("{}<->{}", a, b));
  if (!(bandwidth_mbps > 0.0)) {
    fail(ErrorCode::kConfigError, fmt::format("link {}<->{} bandwidth_mbps", a, b));
  }
  if (!(loss_rate >= 0.0 && loss_rate < 1.0)) {
    fail(ErrorCode::kConfigError, fmt::format("link {}<->{} loss_rate", a, b));
  }
  const auto id = static_cast<LinkId>(links_.size());
  links_.push_back(Link{id, a, b, std::move(one_way_latency_ms), bandwidth_mbps, loss_rate});
  return id;
}

const Link* Network::find_link(std::string_view a, std::string_view b) const {
  for (const auto& l : links_) {
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
  }
  return nullptr;
}

Ipv4Prefix Network::allocate_prefix(std::uint8_t length, const std::vector<Ipv4Prefix>& extra) const {
  const auto& pool = profile_.translation_pool;
  if (length < pool.length) {
    fail(ErrorCode::kExhaustedPrefixSpace,
         fmt::format("/{} does not fit in pool {}", length, pool.str()));
  }
  std::vector<Ipv4Prefix> taken = cluster_cidrs();
  for (const auto& p : translated_prefixes()) taken.push_back(p);
  taken.insert(taken.end(), extra.begin(), extra.end());

  const std::uint64_t step = std::uint64_t{1} << (32 - length);
  const std::uint64_t count = pool.size() / step;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto candidate =
        Ipv4Prefix{Ipv4Address{static_cast<std::uint32_t>(pool.network.value + i * step)}, length};
    const bool clash = std::any_of(taken.begin(), taken.end(),
                                   [&](const Ipv4Prefix& p) { return p.overlaps(candidate); });
    if (!clash) return candidate;
  }
  fail(ErrorCode::kExhaustedPrefixSpace, pool.str());
}

TunnelId Network::establish_tunnel(std::uint64_t session, const std::string& a,
                                   const std::string& b) {
  const auto& ca = cluster(a);
  const auto& cb = cluster(b);
  const Link* link = find_link(a, b);
  if (link == nullptr) fail(ErrorCode::kNoLink, fmt::format("{}<->{}", a, b));

  const auto ta = allocate_prefix(ca.pod_cidr.length, {});
  const auto tb = allocate_prefix(cb.pod_cidr.length, {ta});

  Tunnel t;
  t.id = static_cast<TunnelId>(tunnels_.size());
  t.session = session;
  t.link = link->id;
  t.a = a;
  t.b = b;
  t.a_remap = PrefixRemap{ca.pod_cidr, ta};
  t.b_remap = PrefixRemap{cb.pod_cidr, tb};
  t.overhead_ms = profile_.tunnel_overhead_ms;
  t.overhead_millicpu = profile_.tunnel_overhead_millicpu;
  t.active = true;
  tunnels_.push_back(t);
  return t.id;
}

void Network::close_tunnel(TunnelId id) {
  if (id >= tunnels_.size()) fail(ErrorCode::kNoSuchSession, fmt::format("tunnel {}", id));
  tunnels_[id].active = false;
}

const Tunnel& Network::tunnel(TunnelId id) const {
  if (id >= tunnels_.size()) fail(ErrorCode::kNoSuchSession, fmt::format("tunnel {}", id));
  return tunnels_[id];
}

bool Network::tunnel_active(TunnelId id) const { return id < tunnels_.size() && tunnels_[id].active; }

std::optional<TunnelId> Network::active_tunnel_between(std::string_view a, std::string_view b) const {
  for (const auto& t : tunnels_) {
    if (t.active && ((t.a == a && t.b == b) || (t.a == b && t.b == a))) return t.id;
  }
  return std::nullopt;
}

int Network::active_tunnel_endpoints(std::string_view c) const {
  int n = 0;
  for (const auto& t : tunnels_) {
    if (t.active && (t.a == c || t.b == c)) ++n;
  }
  return n;
}

Ipv4Address Network::translate_address(TunnelId id, TunnelDirection dir, Ipv4Address addr) const {
  const auto& r = tunnel(id).remap(dir);
  if (!r.origin.contains(addr)) fail(ErrorCode::kUnmappedAddress, addr.str());
  return r.translated.with_host(r.origin.host_part(addr));
}

Ipv4Address Network::reverse_translate(TunnelId id, TunnelDirection dir, Ipv4Address translated) const {
  const auto& r = tunnel(id).remap(dir);
  if (!r.translated.contains(translated)) fail(ErrorCode::kUnmappedAddress, translated.str());
  return r.origin.with_host(r.translated.host_part(translated));
}

Ipv4Address Network::view_of(std::string_view viewer, std::string_view owner, Ipv4Address addr) const {
  if (viewer == owner) return addr;
  const auto tid = active_tunnel_between(viewer, owner);
  if (!tid) fail(ErrorCode::kUnresolvable, fmt::format("no tunnel {}<->{}", viewer, owner));
  const auto& t = tunnels_[*tid];
  const auto dir = t.a == owner ? TunnelDirection::kAToB : TunnelDirection::kBToA;
  return translate_address(*tid, dir, addr);
}

std::uint64_t Network::quantize(double ms) {
  return ms <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(ms));
}

std::uint64_t Network::hop_delay(const Distribution& latency, double bandwidth_mbps,
                                 std::int64_t payload_bytes) {
  const double serialization_ms =
      static_cast<double>(payload_bytes) * 8.0 / (bandwidth_mbps * 1000.0);
  return quantize(latency.sample(rng_) + serialization_ms);
}

DeliveryRecord Network::transmit(const FlowRecord& flow) {
  if (flow.payload_bytes <= 0) fail(ErrorCode::kUnresolvable, "payload_bytes must be positive");
  if (flow.exposure == Exposure::kL7Proxy && flow.transport == Transport::kDatagram) {
    fail(ErrorCode::kUnsupportedTransport, "datagram flows cannot traverse an L7 proxy");
  }
  if (!has_cluster(flow.src.cluster) || !has_cluster(flow.dst.cluster)) {
    fail(ErrorCode::kUnresolvable,
         fmt::format("unknown cluster in {} -> {}", flow.src.cluster, flow.dst.cluster));
  }
  const auto& dst_net = cluster(flow.dst.cluster);
  if (!dst_net.pod_cidr.contains(flow.dst.address)) {
    fail(ErrorCode::kUnresolvable,
         fmt::format("{} not inside {} of {}", flow.dst.address.str(), dst_net.pod_cidr.str(),
                     flow.dst.cluster));
  }

  DeliveryRecord rec;
  rec.sent_at = engine_.now();
  const bool l7 = flow.exposure == Exposure::kL7Proxy;
  const std::uint64_t proxy_ms = quantize(profile_.l7_proxy_delay_ms);

  const Distribution* latency = &profile_.local_latency_ms;
  double loss = 0.0;
  if (flow.src.cluster == flow.dst.cluster) {
    rec.dst_seen = flow.dst.address;
    if (l7) rec.path.push_back({"proxy:" + flow.src.cluster, proxy_ms});
    rec.path.push_back({"local:" + flow.src.cluster,
                        hop_delay(profile_.local_latency_ms, profile_.local_bandwidth_mbps,
                                  flow.payload_bytes)});
    if (l7) rec.path.push_back({"proxy:" + flow.dst.cluster, proxy_ms});
  } else {
    const Link* link = find_link(flow.src.cluster, flow.dst.cluster);
    if (link == nullptr) {
      fail(ErrorCode::kUnresolvable,
           fmt::format("no link {}<->{}", flow.src.cluster, flow.dst.cluster));
    }
    latency = &link->one_way_latency_ms;
    loss = link->loss_rate;
    const std::string link_label = fmt::format("link:{}->{}", flow.src.cluster, flow.dst.cluster);
    switch (flow.exposure) {
      case Exposure::kOverlayTunnel: {
        rec.tunnel = active_tunnel_between(flow.src.cluster, flow.dst.cluster);
        if (!rec.tunnel) {
          fail(ErrorCode::kUnresolvable,
               fmt::format("no tunnel {}<->{}", flow.src.cluster, flow.dst.cluster));
        }
        rec.dst_seen = view_of(flow.src.cluster, flow.dst.cluster, flow.dst.address);
        rec.path.push_back(
            {link_label, hop_delay(link->one_way_latency_ms, link->bandwidth_mbps, flow.payload_bytes)});
        rec.path.push_back({"tunnel", quantize(tunnels_[*rec.tunnel].overhead_ms)});
        break;
      }
      case Exposure::kNodePort:
        rec.dst_seen = dst_net.node_address;
        rec.path.push_back(
            {link_label, hop_delay(link->one_way_latency_ms, link->bandwidth_mbps, flow.payload_bytes)});
        rec.path.push_back({"node-port", quantize(profile_.node_port_penalty_ms)});
        break;
      case Exposure::kL7Proxy:
        rec.dst_seen = dst_net.node_address;
        rec.path.push_back({"proxy:" + flow.src.cluster, proxy_ms});
        rec.path.push_back(
            {link_label, hop_delay(link->one_way_latency_ms, link->bandwidth_mbps, flow.payload_bytes)});
        rec.path.push_back({"proxy:" + flow.dst.cluster, proxy_ms});
        break;
    }
  }

  if (flow.transport == Transport::kDatagram) {
    if (rng_.bernoulli(loss)) return rec;  // lost: no delivery, no retry
  } else {
    while (static_cast<int>(rec.retransmits) < profile_.max_stream_retransmits &&
           rng_.bernoulli(loss)) {
      ++rec.retransmits;
      // One round trip to detect the loss and resend.
      rec.path.push_back({"retransmit", 2 * quantize(latency->sample(rng_))});
    }
  }

  std::uint64_t total = 0;
  for (const auto& h : rec.path) total += h.delay_ms;
  rec.delivered_at = rec.sent_at + total;
  return rec;
}

std::vector<Ipv4Prefix> Network::cluster_cidrs() const {
  std::vector<Ipv4Prefix> out;
  for (const auto& [name, c] : clusters_) out.push_back(c.pod_cidr);
  return out;
}

std::vector<Ipv4Prefix> Network::translated_prefixes() const {
  std::vector<Ipv4Prefix> out;
  for (const auto& t : tunnels_) {
    if (!t.active) continue;
    out.push_back(t.a_remap.translated);
    out.push_back(t.b_remap.translated);
  }
  return out;
}

std::vector<std::string> Network::check_invariants() const {
  std::vector<std::string> issues;
  const auto translated = translated_prefixes();
  const auto cidrs = cluster_cidrs();
  for (std::size_t i = 0; i < translated.size(); ++i) {
    for (std::size_t j = i + 1; j < translated.size(); ++j) {
      if (translated[i].overlaps(translated[j])) {
        issues.push_back(fmt::format("translated {} overlaps {}", translated[i].str(),
                                     translated[j].str()));
      }
    }
    for (const auto& c : cidrs) {
      if (translated[i].overlaps(c)) {
        issues.push_back(fmt::format("translated {} overlaps cluster {}", translated[i].str(), c.str()));
      }
    }
  }
  return issues;
}

}  // namespace fedsim
