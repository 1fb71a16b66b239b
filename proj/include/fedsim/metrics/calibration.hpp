#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/lifecycle/cluster.hpp"
#include "fedsim/metrics/config.hpp"

namespace fedsim {

// Built-in calibrated profile. Parameters were fitted once against the
// published figures and are frozen; changing them is a regression.
inline constexpr const char* kPaperV1 = "paper-v1";

std::map<KubeDistribution, ProviderProfile> paper_v1_providers();
// index in 1..5.
ScenarioConfig paper_v1_scenario(int index);
std::vector<ScenarioConfig> paper_v1_scenarios();
// Short-haul, light-weight pipeline whose total delay stays within 15 ms.
ScenarioConfig synthetic_xr_scenario();

struct LifecycleSample {
  KubeDistribution distribution = KubeDistribution::kKubeadm;
  int node_count = 1;
  std::uint64_t seed = 0;
  ProvisionReport report;
};

// Provisions one cluster per (repetition, distribution, size) in its own
// world; repetition r uses seed base_seed + r for every cell.
std::vector<LifecycleSample> run_lifecycle_experiment(const std::map<KubeDistribution, ProviderProfile>& providers,
                                                      int repetitions, const std::vector<int>& sizes,
                                                      std::uint64_t base_seed = 1);

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the profile against its published targets. Unknown profile names
// throw ConfigError("profile").
std::vector<CheckLine> check_profile(const std::string& profile);

}  // namespace fedsim
