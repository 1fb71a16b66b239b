#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/net/network.hpp"
#include "fedsim/sim/distribution.hpp"
#include "fedsim/world.hpp"

namespace fedsim {

struct ComponentSpec {
  std::string cluster;
  std::string ns = "xr-app";
  double cpu_demand = 0.1;  // cores
  std::int64_t mem_mb = 64;
  // Processing delay: render time, buffering, or decode depending on role.
  Distribution delay_ms = Distribution::constant(0.0);

  Resources request() const { return Resources::cores(cpu_demand, mem_mb); }
  bool operator==(const ComponentSpec&) const = default;
};

// renderer --stream--> streamer --datagram--> client
struct PipelineSpec {
  ComponentSpec renderer;
  ComponentSpec streamer;
  ComponentSpec client;
  std::uint64_t frame_interval_ms = 33;
  std::int64_t frame_bytes = 125000;
  Exposure exposure = Exposure::kOverlayTunnel;
  // Lognormal processing delays widen by (1 + gain * k) when k other
  // pipeline components execute in the same cluster.
  double contention_sigma_gain = 0.0;

  bool operator==(const PipelineSpec&) const = default;
};

enum class Role { kRenderer = 0, kStreamer = 1, kClient = 2 };

struct Frame {
  std::uint64_t id = 0;
  SimTime embed_ts;
  std::int64_t size_bytes = 0;
};

// Per-frame delay breakdown; the five terms sum to the end-to-end latency.
struct StageLedger {
  std::uint64_t render_ms = 0;
  std::uint64_t to_streamer_ms = 0;
  std::uint64_t buffer_ms = 0;
  std::uint64_t to_client_ms = 0;
  std::uint64_t decode_ms = 0;

  std::uint64_t total() const { return render_ms + to_streamer_ms + buffer_ms + to_client_ms + decode_ms; }
  bool operator==(const StageLedger&) const = default;
};

struct LatencySample {
  std::uint64_t frame_id = 0;
  SimTime embed_ts;
  SimTime consume_ts;
  std::uint64_t latency_ms = 0;
  StageLedger stages;
  bool operator==(const LatencySample&) const = default;
};

LatencySample end_to_end_latency(const Frame& frame, SimTime consume_ts, const StageLedger& stages = {});

struct FrameCounters {
  std::uint64_t generated = 0;
  std::uint64_t consumed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;

  bool conserved() const { return generated == consumed + dropped + in_flight; }
};

struct Placement {
  std::string pod_cluster;  // where the pod object (or its shadow) lives
  std::string ns;
  std::string pod;
  Assignment assignment;
};

class Pipeline {
 public:
  // Places all three components and starts frame generation at the current
  // virtual time. Frames stop being generated at `stop_at`.
  static std::unique_ptr<Pipeline> spawn(World& world, PipelineSpec spec, SimTime stop_at = SimTime::max(),
                                         std::string name = "xr");

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const PipelineSpec& spec() const { return spec_; }
  const std::array<Placement, 3>& placements() const { return placements_; }
  const FrameCounters& counters() const { return counters_; }
  // Consumed frames in consumption order.
  const std::vector<LatencySample>& samples() const { return samples_; }
  std::optional<Endpoint> execution(Role role) const;
  SimTime started_at() const { return started_at_; }
  void stop_generation_at(SimTime t) { stop_at_ = t; }

 private:
  Pipeline(World& world, PipelineSpec spec, SimTime stop_at, std::string name);

  struct InFlight {
    Frame frame;
    StageLedger stages;
    std::optional<TunnelId> tunnel;
    Endpoint expected;
  };

  void place();
  void generate();
  void after_render(std::uint64_t id);
  void arrive_streamer(std::uint64_t id);
  void after_buffer(std::uint64_t id);
  void arrive_client(std::uint64_t id);
  void consume(std::uint64_t id);
  void drop(std::uint64_t id);
  bool send(std::uint64_t id, Role from, Role to, Transport transport, std::uint64_t StageLedger::*slot,
            void (Pipeline::*on_arrival)(std::uint64_t));
  bool arrival_valid(const InFlight& f, Role at) const;
  std::uint64_t draw_delay(Role role);

  World& world_;
  PipelineSpec spec_;
  SimTime stop_at_;
  std::string name_;
  SimTime started_at_;
  std::array<Placement, 3> placements_;
  std::array<Rng, 3> rngs_;
  std::map<std::uint64_t, InFlight> in_flight_;
  std::uint64_t next_id_ = 0;
  FrameCounters counters_;
  std::vector<LatencySample> samples_;
};

// Cluster-level CPU/memory accounting.
struct UsageBaseline {
  double cpu_pct = 0.0;
  double mem_pct = 0.0;
  bool operator==(const UsageBaseline&) const = default;
};

struct UsageSample {
  std::string cluster;
  SimTime t;
  double cpu_pct = 0.0;
  double mem_pct = 0.0;
};

class UsageMonitor {
 public:
  // `baselines` is keyed by cluster region; clusters in unknown regions
  // start from zero. `noise_sigma` is the log-scale sigma of a median-one
  // multiplicative scrape noise.
  UsageMonitor(World& world, std::map<std::string, UsageBaseline> baselines, double noise_sigma = 0.0);

  UsageSample resource_usage(const std::string& cluster);

  // Periodic sampling of `clusters` from now until `stop_at`.
  void start(std::vector<std::string> clusters, std::uint64_t cadence_ms, SimTime stop_at);
  const std::map<std::string, std::vector<UsageSample>>& series() const { return series_; }
  // Per sampling instant, the mean over sampled clusters.
  const std::vector<double>& cpu_average_series() const { return cpu_avg_; }
  const std::vector<double>& mem_average_series() const { return mem_avg_; }

 private:
  void tick();

  World& world_;
  std::map<std::string, UsageBaseline> baselines_;
  double noise_sigma_;
  Rng rng_;
  std::vector<std::string> clusters_;
  std::uint64_t cadence_ms_ = 1000;
  SimTime stop_at_;
  std::map<std::string, std::vector<UsageSample>> series_;
  std::vector<double> cpu_avg_;
  std::vector<double> mem_avg_;
};

}  // namespace fedsim
