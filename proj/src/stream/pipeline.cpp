#include "fedsim/stream/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

namespace {

constexpr std::array<const char*, 3> kRoleNames = {"renderer", "streamer", "client"};

std::size_t idx(Role r) { return static_cast<std::size_t>(r); }

std::uint64_t quantize(double ms) {
  return ms <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(ms));
}

}  // namespace

LatencySample end_to_end_latency(const Frame& frame, SimTime consume_ts, const StageLedger& stages) {
  return LatencySample{frame.id, frame.embed_ts, consume_ts, consume_ts - frame.embed_ts, stages};
}

std::unique_ptr<Pipeline> Pipeline::spawn(World& world, PipelineSpec spec, SimTime stop_at,
                                          std::string name) {
  if (spec.frame_interval_ms == 0) fail(ErrorCode::kConfigError, "pipeline.frame_interval_ms");
  if (spec.frame_bytes <= 0) fail(ErrorCode::kConfigError, "pipeline.frame_bytes");
  if (spec.exposure == Exposure::kL7Proxy) {
    fail(ErrorCode::kUnsupportedTransport, "streamer->client leg is datagram; L7 proxies cannot carry it");
  }
  std::unique_ptr<Pipeline> p(new Pipeline(world, std::move(spec), stop_at, std::move(name)));
  p->place();
  p->started_at_ = world.engine.now();
  world.engine.schedule_in(0, EventKind::kFrameGeneration, [raw = p.get()] { raw->generate(); });
  return p;
}

Pipeline::Pipeline(World& world, PipelineSpec spec, SimTime stop_at, std::string name)
    : world_(world),
      spec_(std::move(spec)),
      stop_at_(stop_at),
      name_(std::move(name)),
      rngs_{world.engine.rng(fmt::format("pipeline/{}/renderer", name_)),
            world.engine.rng(fmt::format("pipeline/{}/streamer", name_)),
            world.engine.rng(fmt::format("pipeline/{}/client", name_))} {}

void Pipeline::place() {
  const std::string origin = spec_.renderer.cluster;
  const std::array<const ComponentSpec*, 3> comps = {&spec_.renderer, &spec_.streamer, &spec_.client};
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = *comps[i];
    const std::string pod_name = fmt::format("{}-{}", name_, kRoleNames[i]);
    world_.clusters.require_ready(c.cluster);
    Placement pl;
    pl.pod = pod_name;
    pl.ns = c.ns;
    if (c.cluster == origin) {
      auto& st = world_.clusters.get(origin);
      if (!st.has_namespace(c.ns)) {
        fail(ErrorCode::kUnschedulable, fmt::format("{}: namespace {}/{} missing", kRoleNames[i], origin, c.ns));
      }
      st.create_pod(c.ns, pod_name, c.request());
      pl.pod_cluster = origin;
      pl.assignment = world_.scheduler.bind_pod(origin, c.ns, pod_name, PlacementPolicy::local_first());
    } else if (spec_.exposure == Exposure::kOverlayTunnel) {
      // Remote placement goes through the origin's virtual node, into the
      // twin of an offloaded origin namespace.
      const auto* off = world_.peering.find_offload(origin, c.ns);
      if (off == nullptr || !off->targets_cluster(c.cluster)) {
        fail(ErrorCode::kUnschedulable,
             fmt::format("{}: {}/{} is not a twin of an offloaded {} namespace", kRoleNames[i], c.cluster,
                         c.ns, origin));
      }
      world_.clusters.get(origin).create_pod(c.ns, pod_name, c.request());
      pl.pod_cluster = origin;
      pl.assignment = world_.scheduler.bind_pod(origin, c.ns, pod_name,
                                                PlacementPolicy::offload_target(c.cluster));
    } else {
      auto& st = world_.clusters.get(c.cluster);
      if (!st.has_namespace(c.ns)) {
        fail(ErrorCode::kUnschedulable,
             fmt::format("{}: namespace {}/{} missing", kRoleNames[i], c.cluster, c.ns));
      }
      st.create_pod(c.ns, pod_name, c.request());
      pl.pod_cluster = c.cluster;
      pl.assignment = world_.scheduler.bind_pod(c.cluster, c.ns, pod_name, PlacementPolicy::local_first());
    }
    placements_[i] = std::move(pl);
  }
}

std::optional<Endpoint> Pipeline::execution(Role role) const {
  const auto& pl = placements_[idx(role)];
  return world_.peering.execution_endpoint(pl.pod_cluster, pl.ns, pl.pod);
}

std::uint64_t Pipeline::draw_delay(Role role) {
  const std::array<const ComponentSpec*, 3> comps = {&spec_.renderer, &spec_.streamer, &spec_.client};
  Distribution dist = comps[idx(role)]->delay_ms;
  if (spec_.contention_sigma_gain > 0.0) {
    const auto self = execution(role);
    int peers = 0;
    if (self) {
      for (Role other : {Role::kRenderer, Role::kStreamer, Role::kClient}) {
        if (other == role) continue;
        const auto ep = execution(other);
        if (ep && ep->cluster == self->cluster) ++peers;
      }
    }
    dist = dist.with_sigma_scaled(1.0 + spec_.contention_sigma_gain * peers);
  }
  return quantize(dist.sample(rngs_[idx(role)]));
}

void Pipeline::generate() {
  const SimTime now = world_.engine.now();
  if (now >= stop_at_) return;
  const std::uint64_t id = next_id_++;
  ++counters_.generated;
  ++counters_.in_flight;
  InFlight f;
  f.frame = Frame{id, now, spec_.frame_bytes};
  if (!execution(Role::kRenderer)) {
    in_flight_.emplace(id, std::move(f));
    drop(id);
  } else {
    f.stages.render_ms = draw_delay(Role::kRenderer);
    const auto delay = f.stages.render_ms;
    in_flight_.emplace(id, std::move(f));
    world_.engine.schedule_in(delay, EventKind::kStageComplete, [this, id] { after_render(id); });
  }
  world_.engine.schedule_in(spec_.frame_interval_ms, EventKind::kFrameGeneration, [this] { generate(); });
}

bool Pipeline::send(std::uint64_t id, Role from, Role to, Transport transport,
                    std::uint64_t StageLedger::*slot, void (Pipeline::*on_arrival)(std::uint64_t)) {
  auto& f = in_flight_.at(id);
  const auto src = execution(from);
  const auto dst = execution(to);
  if (!src || !dst) return false;
  DeliveryRecord rec;
  try {
    rec = world_.network.transmit(
        FlowRecord{*src, *dst, transport, spec_.exposure, f.frame.size_bytes});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnresolvable) return false;
    throw;
  }
  if (rec.dropped()) return false;
  f.stages.*slot = rec.latency_ms();
  f.tunnel = rec.tunnel;
  f.expected = *dst;
  world_.engine.schedule(*rec.delivered_at, EventKind::kPacketArrival,
                         [this, id, on_arrival] { (this->*on_arrival)(id); });
  return true;
}

bool Pipeline::arrival_valid(const InFlight& f, Role at) const {
  if (f.tunnel && !world_.network.tunnel_active(*f.tunnel)) return false;
  const auto ep = execution(at);
  return ep && *ep == f.expected;
}

void Pipeline::after_render(std::uint64_t id) {
  if (!send(id, Role::kRenderer, Role::kStreamer, Transport::kStream, &StageLedger::to_streamer_ms,
            &Pipeline::arrive_streamer)) {
    drop(id);
  }
}

void Pipeline::arrive_streamer(std::uint64_t id) {
  auto& f = in_flight_.at(id);
  if (!arrival_valid(f, Role::kStreamer)) return drop(id);
  f.stages.buffer_ms = draw_delay(Role::kStreamer);
  world_.engine.schedule_in(f.stages.buffer_ms, EventKind::kStageComplete, [this, id] { after_buffer(id); });
}

void Pipeline::after_buffer(std::uint64_t id) {
  if (!execution(Role::kStreamer)) return drop(id);
  if (!send(id, Role::kStreamer, Role::kClient, Transport::kDatagram, &StageLedger::to_client_ms,
            &Pipeline::arrive_client)) {
    drop(id);
  }
}

void Pipeline::arrive_client(std::uint64_t id) {
  auto& f = in_flight_.at(id);
  if (!arrival_valid(f, Role::kClient)) return drop(id);
  f.stages.decode_ms = draw_delay(Role::kClient);
  world_.engine.schedule_in(f.stages.decode_ms, EventKind::kStageComplete, [this, id] { consume(id); });
}

void Pipeline::consume(std::uint64_t id) {
  auto it = in_flight_.find(id);
  if (!execution(Role::kClient)) return drop(id);
  samples_.push_back(end_to_end_latency(it->second.frame, world_.engine.now(), it->second.stages));
  in_flight_.erase(it);
  --counters_.in_flight;
  ++counters_.consumed;
}

void Pipeline::drop(std::uint64_t id) {
  in_flight_.erase(id);
  --counters_.in_flight;
  ++counters_.dropped;
}

UsageMonitor::UsageMonitor(World& world, std::map<std::string, UsageBaseline> baselines, double noise_sigma)
    : world_(world),
      baselines_(std::move(baselines)),
      noise_sigma_(noise_sigma),
      rng_(world.engine.rng("usage-monitor")) {
  if (noise_sigma_ < 0.0) fail(ErrorCode::kInvalidDistribution, "usage noise sigma");
}

UsageSample UsageMonitor::resource_usage(const std::string& cluster) {
  const auto& st = world_.clusters.require_ready(cluster);
  UsageBaseline base;
  if (auto it = baselines_.find(st.spec().region); it != baselines_.end()) base = it->second;

  std::int64_t cpu_m = 0;
  std::int64_t mem = 0;
  for (const auto& [key, pod] : st.pods()) {
    if (pod.shadow || pod.status != PodStatus::kRunning) continue;
    cpu_m += pod.request.millicpu;
    mem += pod.request.ram_mb;
  }
  cpu_m += world_.network.active_tunnel_endpoints(cluster) * world_.network.profile().tunnel_overhead_millicpu;

  const auto cap = st.capacity();
  double cpu = base.cpu_pct + 100.0 * static_cast<double>(cpu_m) / static_cast<double>(cap.millicpu);
  double mem_pct = base.mem_pct + 100.0 * static_cast<double>(mem) / static_cast<double>(cap.ram_mb);
  if (noise_sigma_ > 0.0) {
    cpu *= std::exp(noise_sigma_ * rng_.standard_normal());
    mem_pct *= std::exp(noise_sigma_ * rng_.standard_normal());
  }
  return UsageSample{cluster, world_.engine.now(), std::clamp(cpu, 0.0, 100.0), std::clamp(mem_pct, 0.0, 100.0)};
}

void UsageMonitor::start(std::vector<std::string> clusters, std::uint64_t cadence_ms, SimTime stop_at) {
  if (cadence_ms == 0) fail(ErrorCode::kConfigError, "sample_cadence_ms");
  clusters_ = std::move(clusters);
  cadence_ms_ = cadence_ms;
  stop_at_ = stop_at;
  world_.engine.schedule_in(0, EventKind::kMetricSample, [this] { tick(); });
}

void UsageMonitor::tick() {
  if (world_.engine.now() >= stop_at_ || clusters_.empty()) return;
  double cpu = 0.0;
  double mem = 0.0;
  for (const auto& c : clusters_) {
    auto s = resource_usage(c);
    cpu += s.cpu_pct;
    mem += s.mem_pct;
    series_[c].push_back(std::move(s));
  }
  cpu_avg_.push_back(cpu / static_cast<double>(clusters_.size()));
  mem_avg_.push_back(mem / static_cast<double>(clusters_.size()));
  world_.engine.schedule_in(cadence_ms_, EventKind::kMetricSample, [this] { tick(); });
}

}  // namespace fedsim
