#include "fedsim/lifecycle/cluster_manager.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

namespace {

std::uint64_t seconds_to_ms(double s) {
  return s <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(s * 1000.0));
}

// Default pod CIDRs: 10.<k>.0.0/16, skipping the 10.64.0.0/10 translation pool.
Ipv4Prefix default_pod_cidr(int index) {
  int octet = index + 1;
  if (octet >= 64) octet += 64;
  if (octet > 255) fail(ErrorCode::kConfigError, "out of default pod CIDRs");
  return Ipv4Prefix{Ipv4Address{(10u << 24) | (static_cast<std::uint32_t>(octet) << 16)}, 16};
}

}  // namespace

ClusterManager::ClusterManager(Engine& engine, std::map<KubeDistribution, ProviderProfile> profiles)
    : engine_(engine), profiles_(std::move(profiles)) {}

const ProviderProfile& ClusterManager::profile(KubeDistribution d) const {
  auto it = profiles_.find(d);
  if (it == profiles_.end()) {
    fail(ErrorCode::kConfigError, fmt::format("provider_profiles.{}", to_string(d)));
  }
  return it->second;
}

ClusterSpec ClusterManager::generate_cluster_definition(KubeDistribution distribution, int node_count,
                                                        Flavor flavor, std::string region) {
  if (node_count < 1) fail(ErrorCode::kInvalidSize, fmt::format("node_count={}", node_count));
  ClusterSpec spec;
  spec.name = fmt::format("cluster-{}", generated_ + 1);
  spec.distribution = distribution;
  spec.node_count = node_count;
  spec.flavor = flavor;
  spec.region = std::move(region);
  spec.pod_cidr = default_pod_cidr(generated_);
  ++generated_;
  return spec;
}

std::string ClusterManager::apply_cluster(ClusterSpec spec) {
  validate(spec);
  if (clusters_.contains(spec.name)) fail(ErrorCode::kDuplicateName, spec.name);
  profile(spec.distribution);
  const std::string name = spec.name;
  auto state = std::make_unique<ClusterState>(std::move(spec), engine_.now());
  auto& ref = *state;
  clusters_.emplace(name, std::move(state));
  rngs_.emplace(name, engine_.rng("lifecycle/" + name));
  schedule_tick(ref);
  return name;
}

Rng& ClusterManager::rng_for(const std::string& cluster) { return rngs_.find(cluster)->second; }

void ClusterManager::schedule_tick(ClusterState& state) {
  const std::string name = state.name();
  engine_.schedule(state.phase_deadline_, EventKind::kLifecycleTick, [this, name] {
    reconcile(name);
  });
}

ClusterPhase ClusterManager::reconcile(std::string_view cluster) {
  auto& st = get(cluster);
  if (st.phase_ == ClusterPhase::kReady || st.phase_ == ClusterPhase::kFailed) return st.phase_;
  const SimTime now = engine_.now();
  if (now < st.phase_deadline_) return st.phase_;

  const auto& prof = profile(st.spec_.distribution);
  Rng& rng = rng_for(st.name());
  const auto advance = [&](ClusterPhase next, std::uint64_t duration_ms) {
    st.phase_ = next;
    st.history_.push_back(next);
    st.phase_deadline_ = now + duration_ms;
  };

  switch (st.phase_) {
    case ClusterPhase::kPending: {
      std::uint64_t longest = 0;
      for (std::size_t i = 0; i < st.nodes_.size(); ++i) {
        longest = std::max(longest, seconds_to_ms(prof.vm_create.sample(rng)));
      }
      advance(ClusterPhase::kProvisioningInfra, longest);
      break;
    }
    case ClusterPhase::kProvisioningInfra:
      advance(ClusterPhase::kBootstrappingControlPlane, seconds_to_ms(prof.cp_bootstrap.sample(rng)));
      break;
    case ClusterPhase::kBootstrappingControlPlane: {
      const std::uint64_t cp_check = seconds_to_ms(prof.readiness_check.sample(rng));
      st.cp_ready_at_ = now + cp_check;
      std::uint64_t longest = cp_check;
      for (int w = 0; w < st.spec_.worker_count(); ++w) {
        const std::uint64_t boot = seconds_to_ms(prof.worker_bootstrap.sample(rng));
        const std::uint64_t check = seconds_to_ms(prof.readiness_check.sample(rng));
        longest = std::max(longest, boot + check);
      }
      advance(ClusterPhase::kBootstrappingWorkers, longest);
      break;
    }
    case ClusterPhase::kBootstrappingWorkers:
      st.phase_ = ClusterPhase::kReady;
      st.history_.push_back(ClusterPhase::kReady);
      st.all_ready_at_ = now;
      for (const auto& cb : ready_callbacks_) cb(st);
      return st.phase_;
    case ClusterPhase::kReady:
    case ClusterPhase::kFailed:
      return st.phase_;
  }
  schedule_tick(st);
  return st.phase_;
}

ProvisionReport ClusterManager::provisioning_report(std::string_view cluster) const {
  const auto& st = get(cluster);
  if (!st.ready() || !st.cp_ready_at_ || !st.all_ready_at_) {
    fail(ErrorCode::kNotReady, fmt::format("{} is {}", st.name(), to_string(st.phase())));
  }
  return ProvisionReport{st.name(), *st.cp_ready_at_, *st.all_ready_at_};
}

ClusterState& ClusterManager::get(std::string_view cluster) {
  auto it = clusters_.find(cluster);
  if (it == clusters_.end()) fail(ErrorCode::kNoSuchCluster, std::string(cluster));
  return *it->second;
}

const ClusterState& ClusterManager::get(std::string_view cluster) const {
  auto it = clusters_.find(cluster);
  if (it == clusters_.end()) fail(ErrorCode::kNoSuchCluster, std::string(cluster));
  return *it->second;
}

ClusterState& ClusterManager::require_ready(std::string_view cluster) {
  auto& st = get(cluster);
  if (!st.ready()) fail(ErrorCode::kNotReady, fmt::format("{} is {}", st.name(), to_string(st.phase())));
  return st;
}

std::vector<std::string> ClusterManager::names() const {
  std::vector<std::string> out;
  for (const auto& [name, st] : clusters_) out.push_back(name);
  return out;
}

bool ClusterManager::all_ready() const {
  return std::all_of(clusters_.begin(), clusters_.end(),
                     [](const auto& kv) { return kv.second->ready(); });
}

}  // namespace fedsim
