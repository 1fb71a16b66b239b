#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedsim/federation/peering.hpp"
#include "fedsim/lifecycle/cluster.hpp"
#include "fedsim/net/network.hpp"
#include "fedsim/stream/pipeline.hpp"
#include "fedsim/world.hpp"

namespace fedsim {

inline constexpr std::string_view kConfigVersion = "fedsim/v1";

struct LinkConfig {
  std::string a;
  std::string b;
  Distribution latency_ms = Distribution::constant(1.0);
  double bandwidth_mbps = 1000.0;
  double loss_rate = 0.0;
  bool operator==(const LinkConfig&) const = default;
};

struct PeeringConfig {
  std::string consumer;
  std::string provider;
  PeeringMode mode = PeeringMode::kUnidirectional;
  // Fraction of free capacity advertised; federation default when unset.
  std::optional<double> share;
  // Seconds after streaming starts at which the session is torn down.
  std::optional<double> teardown_after_s;
  bool operator==(const PeeringConfig&) const = default;
};

struct OffloadConfig {
  std::string origin;
  std::string ns;
  std::vector<std::string> targets;
  OffloadPolicy policy = OffloadPolicy::kBoth;
  bool operator==(const OffloadConfig&) const = default;
};

struct UsageConfig {
  // Keyed by cluster region.
  std::map<std::string, UsageBaseline> regions;
  double noise_sigma = 0.0;
  bool operator==(const UsageConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 42;
  double duration_min = 30.0;
  double warmup_s = 10.0;
  std::uint64_t sample_cadence_ms = 1000;
  double provisioning_timeout_s = 3600.0;
  double qos_threshold_ms = 15.0;
  Exposure exposure = Exposure::kOverlayTunnel;
  std::vector<ClusterSpec> clusters;
  std::map<KubeDistribution, ProviderProfile> provider_profiles;
  NetworkProfile network;
  FederationProfile federation;
  std::vector<LinkConfig> links;
  std::vector<PeeringConfig> peerings;
  std::vector<OffloadConfig> offloads;
  // pipeline.exposure is ignored; the top-level exposure applies.
  PipelineSpec pipeline;
  UsageConfig usage;

  WorldProfile world_profile() const;
  const ClusterSpec* find_cluster(std::string_view name) const;
  bool operator==(const ScenarioConfig&) const = default;
};

// Throws ConfigError whose detail is the offending field path,
// e.g. "pipeline.streamer.cluster".
void validate(const ScenarioConfig& config);

nlohmann::json to_json(const ScenarioConfig& config);
// Parses and validates.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);
std::string dump_scenario(const ScenarioConfig& config);

nlohmann::json to_json(const Distribution& d);
Distribution distribution_from_json(const nlohmann::json& j, const std::string& path);

// Seed precedence: explicit override, then FEDSIM_SEED, then the config.
std::uint64_t resolve_seed(const ScenarioConfig& config, std::optional<std::uint64_t> cli_seed = std::nullopt);

}  // namespace fedsim
