#include "fedsim/federation/peering.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

std::string_view to_string(PeeringMode m) {
  return m == PeeringMode::kBidirectional ? "bidirectional" : "unidirectional";
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kDiscovered: return "Discovered";
    case SessionState::kAuthenticating: return "Authenticating";
    case SessionState::kEstablished: return "Established";
    case SessionState::kTornDown: return "TornDown";
  }
  return "Unknown";
}

std::string_view to_string(OffloadPolicy p) {
  switch (p) {
    case OffloadPolicy::kPods: return "pods";
    case OffloadPolicy::kServices: return "services";
    case OffloadPolicy::kBoth: return "both";
  }
  return "unknown";
}

std::optional<PeeringMode> parse_peering_mode(std::string_view text) {
  if (text == "bidirectional") return PeeringMode::kBidirectional;
  if (text == "unidirectional") return PeeringMode::kUnidirectional;
  return std::nullopt;
}

std::optional<OffloadPolicy> parse_offload_policy(std::string_view text) {
  if (text == "pods") return OffloadPolicy::kPods;
  if (text == "services") return OffloadPolicy::kServices;
  if (text == "both") return OffloadPolicy::kBoth;
  return std::nullopt;
}

bool NamespaceOffload::targets_cluster(std::string_view c) const {
  return std::find(targets.begin(), targets.end(), c) != targets.end();
}

namespace {

std::string offload_key(std::string_view origin, std::string_view ns) {
  return fmt::format("{}/{}", origin, ns);
}

std::uint64_t quantize_ms(double v) {
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
}

}  // namespace

PeeringManager::PeeringManager(Engine& engine, ClusterManager& clusters, Network& network,
                               FederationProfile profile)
    : engine_(engine),
      clusters_(clusters),
      network_(network),
      profile_(std::move(profile)),
      rng_(engine.rng("peering")) {
  if (!(profile_.default_share > 0.0 && profile_.default_share <= 1.0)) {
    fail(ErrorCode::kInvalidShare, fmt::format("default_share={}", profile_.default_share));
  }
  if (profile_.sync_tick_ms == 0) fail(ErrorCode::kConfigError, "federation.sync_tick_ms");
}

std::string PeeringManager::issue_token(const std::string& cluster, SessionId id) const {
  return fmt::format("tok-{:016x}", splitmix64(engine_.seed() ^ fnv1a64(cluster) ^ splitmix64(id)));
}

PeeringSession& PeeringManager::mutable_session(SessionId id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNoSuchSession, fmt::format("session {}", id));
  return it->second;
}

const PeeringSession& PeeringManager::session(SessionId id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNoSuchSession, fmt::format("session {}", id));
  return it->second;
}

std::optional<SessionId> PeeringManager::session_between(std::string_view a, std::string_view b) const {
  if (a == b) return std::nullopt;
  for (const auto& [id, s] : sessions_) {
    if (s.state != SessionState::kTornDown && s.involves(a) && s.involves(b)) return id;
  }
  return std::nullopt;
}

std::vector<const PeeringSession*> PeeringManager::sessions() const {
  std::vector<const PeeringSession*> out;
  for (const auto& [id, s] : sessions_) out.push_back(&s);
  return out;
}

bool PeeringManager::established(std::string_view a, std::string_view b) const {
  const auto id = session_between(a, b);
  return id && sessions_.at(*id).state == SessionState::kEstablished;
}

SessionId PeeringManager::initiate_peering(const std::string& consumer, const std::string& provider,
                                           PeeringMode mode) {
  if (consumer == provider) fail(ErrorCode::kSelfPeering, consumer);
  clusters_.require_ready(consumer);
  clusters_.require_ready(provider);
  if (session_between(consumer, provider)) {
    fail(ErrorCode::kAlreadyPeered, fmt::format("{}<->{}", consumer, provider));
  }
  if (network_.find_link(consumer, provider) == nullptr) {
    fail(ErrorCode::kNoLink, fmt::format("{}<->{}", consumer, provider));
  }

  PeeringSession s;
  s.id = next_session_++;
  s.consumer = consumer;
  s.provider = provider;
  s.mode = mode;
  s.state = SessionState::kDiscovered;
  const SessionId id = s.id;
  sessions_.emplace(id, std::move(s));
  engine_.schedule_in(quantize_ms(profile_.discovery_ms.sample(rng_)), EventKind::kPeeringStep,
                      [this, id] { on_discovered(id); });
  return id;
}

void PeeringManager::on_discovered(SessionId id) {
  auto& s = mutable_session(id);
  if (s.state != SessionState::kDiscovered) return;
  s.state = SessionState::kAuthenticating;
  // Each side presents the token its own identity issued for this session.
  s.consumer_token = issue_token(s.consumer, id);
  s.provider_token = issue_token(s.provider, id);
  try {
    s.tunnel = network_.establish_tunnel(id, s.consumer, s.provider);
  } catch (const Error& e) {
    s.state = SessionState::kTornDown;
    s.failure = e.what();
    return;
  }
  engine_.schedule_in(quantize_ms(profile_.auth_ms.sample(rng_)), EventKind::kPeeringStep,
                      [this, id] { on_authenticated(id); });
}

void PeeringManager::on_authenticated(SessionId id) {
  auto& s = mutable_session(id);
  if (s.state != SessionState::kAuthenticating) return;
  s.consumer_verified = s.consumer_token == issue_token(s.consumer, id);
  s.provider_verified = s.provider_token == issue_token(s.provider, id);
  if (!s.consumer_verified || !s.provider_verified) {
    s.state = SessionState::kTornDown;
    s.failure = "identity verification failed";
    if (s.tunnel) network_.close_tunnel(*s.tunnel);
    return;
  }
  s.state = SessionState::kEstablished;
  materialize_virtual_node(s, s.consumer, s.provider);
  if (s.mode == PeeringMode::kBidirectional) materialize_virtual_node(s, s.provider, s.consumer);
  ensure_sync_running();
}

ResourceOffer PeeringManager::compute_offer(const std::string& provider, double share) const {
  const Resources free = clusters_.get(provider).free_capacity();
  ResourceOffer offer;
  offer.from = provider;
  offer.share = share;
  offer.amount.millicpu = static_cast<std::int64_t>(std::floor(share * static_cast<double>(free.millicpu)));
  offer.amount.ram_mb = static_cast<std::int64_t>(std::floor(share * static_cast<double>(free.ram_mb)));
  offer.amount.millicpu = std::max<std::int64_t>(0, offer.amount.millicpu);
  offer.amount.ram_mb = std::max<std::int64_t>(0, offer.amount.ram_mb);
  return offer;
}

double PeeringManager::share_of(std::string_view provider) const {
  auto it = shares_.find(provider);
  return it == shares_.end() ? profile_.default_share : it->second;
}

ResourceOffer PeeringManager::advertise_resources(const std::string& provider, double share) {
  if (!(share > 0.0 && share <= 1.0)) fail(ErrorCode::kInvalidShare, fmt::format("share={}", share));
  clusters_.get(provider);
  shares_.insert_or_assign(provider, share);
  auto offer = compute_offer(provider, share);
  pending_offers_.insert_or_assign(provider, offer);
  return offer;
}

void PeeringManager::materialize_virtual_node(const PeeringSession& s, const std::string& host,
                                              const std::string& backing) {
  const auto offer = compute_offer(backing, share_of(backing));
  VirtualNode vn;
  vn.id = "vk-" + backing;
  vn.host = host;
  vn.backing = backing;
  vn.capacity = offer.amount;
  vn.session = s.id;
  vnodes_.push_back(std::move(vn));
}

std::vector<const VirtualNode*> PeeringManager::virtual_nodes(std::string_view host) const {
  std::vector<const VirtualNode*> out;
  for (const auto& vn : vnodes_) {
    if (vn.host == host) out.push_back(&vn);
  }
  return out;
}

VirtualNode* PeeringManager::find_virtual_node(std::string_view host, std::string_view id) {
  for (auto& vn : vnodes_) {
    if (vn.host == host && vn.id == id) return &vn;
  }
  return nullptr;
}

const NamespaceOffload* PeeringManager::find_offload(std::string_view origin, std::string_view ns) const {
  auto it = offloads_.find(offload_key(origin, ns));
  return it == offloads_.end() ? nullptr : &it->second;
}

const NamespaceOffload& PeeringManager::offload_namespace(const std::string& origin,
                                                          const std::string& ns,
                                                          const std::vector<std::string>& targets,
                                                          OffloadPolicy policy) {
  auto& origin_state = clusters_.get(origin);
  if (!origin_state.has_namespace(ns)) fail(ErrorCode::kNoSuchNamespace, fmt::format("{}/{}", origin, ns));
  for (const auto& t : targets) {
    if (!established(origin, t)) fail(ErrorCode::kNotPeered, fmt::format("{}<->{}", origin, t));
  }

  const auto key = offload_key(origin, ns);
  auto [it, inserted] = offloads_.try_emplace(key);
  auto& off = it->second;
  if (inserted) {
    off.ns = ns;
    off.origin = origin;
  }
  off.policy = policy;
  for (const auto& t : targets) {
    if (off.targets_cluster(t)) continue;
    auto& target_state = clusters_.get(t);
    // A native namespace of the same name keeps its identity; the twin
    // gets an origin suffix instead.
    std::string twin = ns;
    if (target_state.has_namespace(twin)) twin = fmt::format("{}-{}", ns, origin);
    target_state.create_namespace(NamespaceInfo{twin, origin, ns});
    off.targets.push_back(t);
    off.twins.emplace(t, twin);
  }
  return off;
}

void PeeringManager::withdraw_twin(NamespaceOffload& off, const std::string& target) {
  // Evict pods of this namespace that run in the target.
  for (auto& vn : vnodes_) {
    if (vn.host != off.origin || vn.backing != target) continue;
    auto& origin_state = clusters_.get(off.origin);
    for (auto& [key, pod] : origin_state.pods()) {
      if (pod.ns != off.ns || pod.node != vn.id || !pod.shadow) continue;
      auto& backing = clusters_.get(target);
      const auto twin_it = off.twins.find(target);
      if (twin_it != off.twins.end()) {
        if (Pod* inc = backing.find_pod(twin_it->second, pod.name)) {
          if (Node* n = backing.find_node(inc->node)) n->allocated -= inc->request;
          inc->status = PodStatus::kTerminated;
          terminated_.push_back(*inc);
          backing.erase_pod(inc->ns, inc->name);
        }
      }
      vn.allocated -= pod.request;
      pod.shadow = false;
      pod.node.clear();
      pod.status = PodStatus::kPending;
      pod.incarnation_cluster.clear();
      pod.address = Ipv4Address{};
    }
  }
  auto twin_it = off.twins.find(target);
  if (twin_it != off.twins.end()) {
    auto& target_state = clusters_.get(target);
    std::vector<std::pair<std::string, std::string>> doomed;
    for (const auto& [key, svc] : target_state.services()) {
      if (svc.ns == twin_it->second) doomed.emplace_back(svc.ns, svc.name);
    }
    for (const auto& [sns, sname] : doomed) target_state.erase_service(sns, sname);
    target_state.delete_namespace(twin_it->second);
    off.twins.erase(twin_it);
  }
  std::erase_if(reflections_, [&](const ReflectedService& r) {
    return r.origin == off.origin && r.ns == off.ns && r.target == target;
  });
  std::erase(off.targets, target);
}

void PeeringManager::unoffload_namespace(const std::string& origin, const std::string& ns) {
  auto it = offloads_.find(offload_key(origin, ns));
  if (it == offloads_.end()) fail(ErrorCode::kNoSuchNamespace, fmt::format("{}/{} not offloaded", origin, ns));
  auto targets = it->second.targets;
  for (const auto& t : targets) withdraw_twin(it->second, t);
  offloads_.erase(it);
}

ShadowPod PeeringManager::offload_pod(const std::string& origin, const std::string& ns,
                                      const std::string& pod_name, const std::string& vnode_id) {
  auto& origin_state = clusters_.get(origin);
  VirtualNode* vn = find_virtual_node(origin, vnode_id);
  if (vn == nullptr) fail(ErrorCode::kNotPeered, fmt::format("no virtual node {} in {}", vnode_id, origin));
  Pod* pod = origin_state.find_pod(ns, pod_name);
  if (pod == nullptr) fail(ErrorCode::kNoSuchPod, fmt::format("{}/{}/{}", origin, ns, pod_name));
  if (!pod->node.empty()) fail(ErrorCode::kUnschedulable, fmt::format("pod {} already bound", pod_name));

  const auto* off = find_offload(origin, ns);
  if (off == nullptr || !off->targets_cluster(vn->backing) || !allows_pods(off->policy)) {
    fail(ErrorCode::kPolicyForbids,
         fmt::format("namespace {}/{} does not offload pods to {}", origin, ns, vn->backing));
  }
  if (!pod->request.fits_within(vn->free())) {
    fail(ErrorCode::kInsufficientCapacity,
         fmt::format("pod {} needs {}, {} has {}", pod_name, pod->request.str(), vn->id, vn->free().str()));
  }

  auto& backing = clusters_.get(vn->backing);
  Node* target_node = nullptr;
  for (auto& n : backing.nodes()) {
    if (pod->request.fits_within(n.free())) {
      target_node = &n;
      break;
    }
  }
  if (target_node == nullptr) {
    fail(ErrorCode::kInsufficientCapacity, fmt::format("no node in {} fits {}", vn->backing, pod_name));
  }

  const std::string& twin = off->twins.at(vn->backing);
  Pod& inc = backing.create_pod(twin, pod_name, pod->request);
  inc.status = PodStatus::kRunning;
  inc.node = target_node->id;
  inc.address = backing.allocate_pod_address();
  inc.origin_cluster = origin;
  target_node->allocated += inc.request;

  vn->allocated += pod->request;
  pod->node = vn->id;
  pod->shadow = true;
  pod->incarnation_cluster = vn->backing;
  pod->status = PodStatus::kPending;
  pod->last_sync = engine_.now();
  pod->address = network_.view_of(origin, vn->backing, inc.address);

  return ShadowPod{pod->name, ns, origin, vn->backing, pod->status, pod->last_sync};
}

ReflectedService PeeringManager::reflect_service(const std::string& origin, const std::string& ns,
                                                 const std::string& service, SessionId id) {
  const auto& s = session(id);
  if (s.state != SessionState::kEstablished || !s.involves(origin)) {
    fail(ErrorCode::kNotPeered, fmt::format("session {} does not serve {}", id, origin));
  }
  const std::string target = s.other(origin);
  auto& origin_state = clusters_.get(origin);
  Service* svc = origin_state.find_service(ns, service);
  if (svc == nullptr) fail(ErrorCode::kNoSuchService, fmt::format("{}/{}/{}", origin, ns, service));
  const auto* off = find_offload(origin, ns);
  if (off == nullptr || !off->targets_cluster(target) || !allows_services(off->policy)) {
    fail(ErrorCode::kPolicyForbids,
         fmt::format("namespace {}/{} does not reflect services to {}", origin, ns, target));
  }

  const auto origin_cidr = network_.pod_cidr(origin);
  const auto tunnel = *s.tunnel;
  const auto& t = network_.tunnel(tunnel);
  // Direction that rewrites origin addresses for the target, and the one
  // that rewrote target addresses for the origin.
  const auto out_dir = t.a == origin ? TunnelDirection::kAToB : TunnelDirection::kBToA;
  const auto in_dir = t.a == origin ? TunnelDirection::kBToA : TunnelDirection::kAToB;

  ReflectedService r;
  r.service = service;
  r.ns = ns;
  r.origin = origin;
  r.target = target;
  r.target_ns = off->twins.at(target);
  r.session = id;
  for (const auto& ep : svc->endpoints) {
    if (t.remap(in_dir).translated.contains(ep)) {
      // Endpoint already executes in the target; hand back its native address.
      r.remote_addresses.push_back(network_.reverse_translate(tunnel, in_dir, ep));
    } else if (origin_cidr.contains(ep)) {
      r.remote_addresses.push_back(network_.translate_address(tunnel, out_dir, ep));
    }
  }

  clusters_.get(target).upsert_service(Service{service, r.target_ns, r.remote_addresses, origin});
  std::erase_if(reflections_, [&](const ReflectedService& x) {
    return x.origin == origin && x.ns == ns && x.service == service && x.target == target;
  });
  reflections_.push_back(r);
  return r;
}

void PeeringManager::evict(VirtualNode& vn) {
  for (auto& [key, off] : offloads_) {
    if (off.origin == vn.host && off.targets_cluster(vn.backing)) withdraw_twin(off, vn.backing);
  }
}

void PeeringManager::teardown_peering(SessionId id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.state == SessionState::kTornDown) {
    fail(ErrorCode::kNoSuchSession, fmt::format("session {}", id));
  }
  auto& s = it->second;
  for (auto& vn : vnodes_) {
    if (vn.session == id) evict(vn);
  }
  // Offloads in either direction between the pair lose their twins even
  // when no virtual node was involved (service-only offloads).
  for (auto& [key, off] : offloads_) {
    if (off.origin == s.consumer && off.targets_cluster(s.provider)) withdraw_twin(off, s.provider);
    if (off.origin == s.provider && off.targets_cluster(s.consumer)) withdraw_twin(off, s.consumer);
  }
  std::erase_if(offloads_, [](const auto& kv) { return kv.second.targets.empty(); });
  std::erase_if(vnodes_, [id](const VirtualNode& vn) { return vn.session == id; });
  std::erase_if(reflections_, [id](const ReflectedService& r) { return r.session == id; });
  if (s.tunnel && network_.tunnel_active(*s.tunnel)) network_.close_tunnel(*s.tunnel);
  s.state = SessionState::kTornDown;
}

std::optional<Endpoint> PeeringManager::execution_endpoint(std::string_view origin, std::string_view ns,
                                                           std::string_view pod_name) const {
  const auto& st = clusters_.get(origin);
  const Pod* pod = st.find_pod(ns, pod_name);
  if (pod == nullptr) return std::nullopt;
  if (!pod->shadow) {
    if (pod->status != PodStatus::kRunning) return std::nullopt;
    return Endpoint{std::string(origin), pod->address};
  }
  const auto* off = find_offload(origin, ns);
  if (off == nullptr) return std::nullopt;
  auto twin = off->twins.find(pod->incarnation_cluster);
  if (twin == off->twins.end()) return std::nullopt;
  const Pod* inc = clusters_.get(pod->incarnation_cluster).find_pod(twin->second, pod_name);
  if (inc == nullptr || inc->status != PodStatus::kRunning) return std::nullopt;
  return Endpoint{pod->incarnation_cluster, inc->address};
}

void PeeringManager::ensure_sync_running() {
  if (sync_running_) return;
  sync_running_ = true;
  engine_.schedule_in(profile_.sync_tick_ms, EventKind::kSyncTick, [this] { sync_tick(); });
}

void PeeringManager::sync_tick() {
  ++sync_ticks_;
  const SimTime now = engine_.now();
  for (auto& vn : vnodes_) {
    auto it = pending_offers_.find(vn.backing);
    if (it == pending_offers_.end()) continue;
    // Never shrink below what is already placed on the node.
    vn.capacity.millicpu = std::max(it->second.amount.millicpu, vn.allocated.millicpu);
    vn.capacity.ram_mb = std::max(it->second.amount.ram_mb, vn.allocated.ram_mb);
  }
  pending_offers_.clear();

  for (const auto& name : clusters_.names()) {
    auto& st = clusters_.get(name);
    for (auto& [key, pod] : st.pods()) {
      if (!pod.shadow) continue;
      const auto ep = execution_endpoint(name, pod.ns, pod.name);
      pod.status = ep ? PodStatus::kRunning : PodStatus::kPending;
      pod.last_sync = now;
    }
  }
  engine_.schedule_in(profile_.sync_tick_ms, EventKind::kSyncTick, [this] { sync_tick(); });
}

std::vector<std::string> PeeringManager::check_invariants() const {
  std::vector<std::string> issues;
  const SimTime now = engine_.now();

  // Virtual-node existence matches established sessions and their direction.
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& [id, s] : sessions_) {
    if (s.state != SessionState::kEstablished) continue;
    if (!s.consumer_verified || !s.provider_verified) {
      issues.push_back(fmt::format("session {} established without verified tokens", id));
    }
    expected.emplace(s.consumer, s.provider);
    if (s.mode == PeeringMode::kBidirectional) expected.emplace(s.provider, s.consumer);
  }
  std::set<std::pair<std::string, std::string>> actual;
  for (const auto& vn : vnodes_) {
    if (!actual.emplace(vn.host, vn.backing).second) {
      issues.push_back(fmt::format("duplicate virtual node {} in {}", vn.id, vn.host));
    }
    auto it = sessions_.find(vn.session);
    if (it == sessions_.end() || it->second.state != SessionState::kEstablished) {
      issues.push_back(fmt::format("virtual node {} in {} without established session", vn.id, vn.host));
    }
    if (!vn.allocated.fits_within(vn.capacity)) {
      issues.push_back(fmt::format("virtual node {} in {} overcommitted: {} > {}", vn.id, vn.host,
                                   vn.allocated.str(), vn.capacity.str()));
    }
  }
  if (actual != expected) issues.push_back("virtual nodes do not match established sessions");

  // Capacity conservation: vnode allocation equals the sum of bound pods.
  for (const auto& vn : vnodes_) {
    Resources bound;
    for (const auto& [key, pod] : clusters_.get(vn.host).pods()) {
      if (pod.shadow && pod.node == vn.id) bound += pod.request;
    }
    if (bound != vn.allocated) {
      issues.push_back(fmt::format("virtual node {} in {} accounts {} but pods hold {}", vn.id, vn.host,
                                   vn.allocated.str(), bound.str()));
    }
  }

  // Single incarnation and shadow freshness.
  std::map<std::string, int> incarnations;  // "origin/ns/name" -> live copies
  for (const auto& name : clusters_.names()) {
    const auto& st = clusters_.get(name);
    for (const auto& [key, pod] : st.pods()) {
      if (pod.origin_cluster.empty() || pod.status == PodStatus::kTerminated) continue;
      const auto it = st.namespaces().find(pod.ns);
      const std::string origin_ns = it != st.namespaces().end() ? it->second.twin_of_namespace : pod.ns;
      ++incarnations[fmt::format("{}/{}/{}", pod.origin_cluster, origin_ns, pod.name)];
    }
  }
  for (const auto& name : clusters_.names()) {
    const auto& st = clusters_.get(name);
    for (const auto& [key, pod] : st.pods()) {
      if (!pod.shadow) continue;
      const auto id = fmt::format("{}/{}/{}", name, pod.ns, pod.name);
      const int live = incarnations.count(id) ? incarnations[id] : 0;
      if (live != 1) issues.push_back(fmt::format("pod {} has {} live incarnations", id, live));
      incarnations.erase(id);
      const bool remote_running = execution_endpoint(name, pod.ns, pod.name).has_value();
      const auto remote = remote_running ? PodStatus::kRunning : PodStatus::kPending;
      if (pod.status != remote && now - pod.last_sync > profile_.sync_tick_ms) {
        issues.push_back(fmt::format("shadow {} stale since {}", id, pod.last_sync.millis));
      }
    }
  }
  for (const auto& [id, n] : incarnations) {
    issues.push_back(fmt::format("orphan incarnation {} ({} copies)", id, n));
  }

  // Twin symmetry.
  for (const auto& [key, off] : offloads_) {
    for (const auto& t : off.targets) {
      auto twin = off.twins.find(t);
      if (twin == off.twins.end() || !clusters_.get(t).has_namespace(twin->second)) {
        issues.push_back(fmt::format("offload {} lacks twin in {}", key, t));
      }
      if (!established(off.origin, t)) {
        issues.push_back(fmt::format("offload {} targets unpeered {}", key, t));
      }
    }
  }
  for (const auto& name : clusters_.names()) {
    for (const auto& [ns, info] : clusters_.get(name).namespaces()) {
      if (info.twin_of_cluster.empty()) continue;
      const auto* off = find_offload(info.twin_of_cluster, info.twin_of_namespace);
      if (off == nullptr || !off->targets_cluster(name)) {
        issues.push_back(fmt::format("stray twin namespace {}/{}", name, ns));
      }
    }
  }
  return issues;
}

}  // namespace fedsim
