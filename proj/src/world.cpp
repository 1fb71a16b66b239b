#include "fedsim/world.hpp"

namespace fedsim {

World::World(std::uint64_t seed, WorldProfile profile)
    : engine(seed),
      clusters(engine, std::move(profile.providers)),
      network(engine, std::move(profile.network)),
      peering(engine, clusters, network, std::move(profile.federation)),
      scheduler(clusters, peering) {}

std::string World::add_cluster(ClusterSpec spec) {
  validate(spec);
  const auto cidr = spec.pod_cidr;
  const auto name = clusters.apply_cluster(std::move(spec));
  network.register_cluster(name, cidr);
  return name;
}

bool World::run_until_ready(SimTime deadline, std::uint64_t step_ms) {
  while (!clusters.all_ready()) {
    if (engine.now() >= deadline) return false;
    const SimTime next = engine.now() + step_ms;
    engine.run_until(next < deadline ? next : deadline);
  }
  return true;
}

}  // namespace fedsim
