#include "fedsim/metrics/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fedsim/error.hpp"

namespace fedsim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path) { fail(ErrorCode::kConfigError, path); }

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

std::string index(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

// Object accessor that reports failures by field path.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? std::string("<root>") : path_);
  }

  const std::string& path() const { return path_; }
  std::string path(std::string_view key) const { return join(path_, key); }
  bool has(std::string_view key) const { return j_.contains(key) && !j_.at(std::string(key)).is_null(); }

  const json& raw(std::string_view key) const {
    if (!has(key)) bad(path(key));
    return j_.at(std::string(key));
  }

  std::string str(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_string()) bad(path(key));
    return v.get<std::string>();
  }
  std::string str_or(std::string_view key, std::string def) const { return has(key) ? str(key) : def; }

  double num(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_number()) bad(path(key));
    return v.get<double>();
  }
  double num_or(std::string_view key, double def) const { return has(key) ? num(key) : def; }

  std::uint64_t u64(std::string_view key) const {
    const auto& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    bad(path(key));
  }
  std::uint64_t u64_or(std::string_view key, std::uint64_t def) const { return has(key) ? u64(key) : def; }

  std::int64_t i64(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) bad(path(key));
    return v.get<std::int64_t>();
  }
  std::int64_t i64_or(std::string_view key, std::int64_t def) const { return has(key) ? i64(key) : def; }

  Obj obj(std::string_view key) const { return Obj(raw(key), path(key)); }

  Distribution dist_or(std::string_view key, const Distribution& def) const {
    return has(key) ? distribution_from_json(raw(key), path(key)) : def;
  }

  template <class F>
  void each(std::string_view key, F&& f) const {
    if (!has(key)) return;
    const auto& arr = raw(key);
    if (!arr.is_array()) bad(path(key));
    for (std::size_t i = 0; i < arr.size(); ++i) f(arr[i], index(path(key), i));
  }

 private:
  const json& j_;
  std::string path_;
};

std::string req_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path);
  return j.get<std::string>();
}

json to_json(const Flavor& f) { return {{"vcpus", f.vcpus}, {"ram_mb", f.ram_mb}, {"disk_gb", f.disk_gb}}; }

json to_json(const ClusterSpec& c) {
  return {{"name", c.name},
          {"distribution", std::string(to_string(c.distribution))},
          {"node_count", c.node_count},
          {"flavor", to_json(c.flavor)},
          {"region", c.region},
          {"pod_cidr", c.pod_cidr.str()},
          {"namespaces", c.namespaces}};
}

ClusterSpec cluster_from(const Obj& o) {
  ClusterSpec c;
  c.name = o.str("name");
  const auto dist = parse_kube_distribution(o.str("distribution"));
  if (!dist) bad(o.path("distribution"));
  c.distribution = *dist;
  c.node_count = static_cast<int>(o.i64_or("node_count", 1));
  if (o.has("flavor")) {
    const auto f = o.obj("flavor");
    c.flavor.vcpus = static_cast<int>(f.i64_or("vcpus", c.flavor.vcpus));
    c.flavor.ram_mb = f.i64_or("ram_mb", c.flavor.ram_mb);
    c.flavor.disk_gb = static_cast<int>(f.i64_or("disk_gb", c.flavor.disk_gb));
  }
  c.region = o.str_or("region", c.region);
  const auto cidr = Ipv4Prefix::parse(o.str("pod_cidr"));
  if (!cidr) bad(o.path("pod_cidr"));
  c.pod_cidr = *cidr;
  o.each("namespaces", [&](const json& j, const std::string& p) { c.namespaces.push_back(req_string(j, p)); });
  return c;
}

json to_json(const ProviderProfile& p) {
  return {{"vm_create_s", to_json(p.vm_create)},
          {"cp_bootstrap_s", to_json(p.cp_bootstrap)},
          {"worker_bootstrap_s", to_json(p.worker_bootstrap)},
          {"readiness_check_s", to_json(p.readiness_check)}};
}

ProviderProfile provider_from(const Obj& o, KubeDistribution d) {
  ProviderProfile p;
  p.distribution = d;
  p.vm_create = distribution_from_json(o.raw("vm_create_s"), o.path("vm_create_s"));
  p.cp_bootstrap = distribution_from_json(o.raw("cp_bootstrap_s"), o.path("cp_bootstrap_s"));
  p.worker_bootstrap = distribution_from_json(o.raw("worker_bootstrap_s"), o.path("worker_bootstrap_s"));
  p.readiness_check = distribution_from_json(o.raw("readiness_check_s"), o.path("readiness_check_s"));
  return p;
}

json to_json(const NetworkProfile& n) {
  return {{"local_latency_ms", to_json(n.local_latency_ms)},
          {"local_bandwidth_mbps", n.local_bandwidth_mbps},
          {"tunnel_overhead_ms", n.tunnel_overhead_ms},
          {"tunnel_overhead_millicpu", n.tunnel_overhead_millicpu},
          {"node_port_penalty_ms", n.node_port_penalty_ms},
          {"l7_proxy_delay_ms", n.l7_proxy_delay_ms},
          {"translation_pool", n.translation_pool.str()},
          {"max_stream_retransmits", n.max_stream_retransmits}};
}

NetworkProfile network_from(const Obj& o) {
  NetworkProfile n;
  n.local_latency_ms = o.dist_or("local_latency_ms", n.local_latency_ms);
  n.local_bandwidth_mbps = o.num_or("local_bandwidth_mbps", n.local_bandwidth_mbps);
  n.tunnel_overhead_ms = o.num_or("tunnel_overhead_ms", n.tunnel_overhead_ms);
  n.tunnel_overhead_millicpu = o.i64_or("tunnel_overhead_millicpu", n.tunnel_overhead_millicpu);
  n.node_port_penalty_ms = o.num_or("node_port_penalty_ms", n.node_port_penalty_ms);
  n.l7_proxy_delay_ms = o.num_or("l7_proxy_delay_ms", n.l7_proxy_delay_ms);
  if (o.has("translation_pool")) {
    const auto pool = Ipv4Prefix::parse(o.str("translation_pool"));
    if (!pool) bad(o.path("translation_pool"));
    n.translation_pool = *pool;
  }
  n.max_stream_retransmits = static_cast<int>(o.i64_or("max_stream_retransmits", n.max_stream_retransmits));
  return n;
}

json to_json(const FederationProfile& f) {
  return {{"discovery_ms", to_json(f.discovery_ms)},
          {"auth_ms", to_json(f.auth_ms)},
          {"sync_tick_ms", f.sync_tick_ms},
          {"default_share", f.default_share}};
}

FederationProfile federation_from(const Obj& o) {
  FederationProfile f;
  f.discovery_ms = o.dist_or("discovery_ms", f.discovery_ms);
  f.auth_ms = o.dist_or("auth_ms", f.auth_ms);
  f.sync_tick_ms = o.u64_or("sync_tick_ms", f.sync_tick_ms);
  f.default_share = o.num_or("default_share", f.default_share);
  return f;
}

json to_json(const ComponentSpec& c) {
  return {{"cluster", c.cluster},
          {"namespace", c.ns},
          {"cpu_cores", c.cpu_demand},
          {"mem_mb", c.mem_mb},
          {"delay_ms", to_json(c.delay_ms)}};
}

ComponentSpec component_from(const Obj& o) {
  ComponentSpec c;
  c.cluster = o.str("cluster");
  c.ns = o.str_or("namespace", c.ns);
  c.cpu_demand = o.num_or("cpu_cores", c.cpu_demand);
  c.mem_mb = o.i64_or("mem_mb", c.mem_mb);
  c.delay_ms = o.dist_or("delay_ms", c.delay_ms);
  return c;
}

}  // namespace

nlohmann::json to_json(const Distribution& d) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantDist>) {
          return {{"kind", "constant"}, {"value", p.value}};
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          return {{"kind", "uniform"}, {"lo", p.lo}, {"hi", p.hi}};
        } else {
          return {{"kind", "lognormal"}, {"median", p.median}, {"sigma", p.sigma}};
        }
      },
      d.params());
}

Distribution distribution_from_json(const nlohmann::json& j, const std::string& path) {
  try {
    if (j.is_number()) return Distribution::constant(j.get<double>());
    const Obj o(j, path);
    const auto kind = o.str("kind");
    if (kind == "constant") return Distribution::constant(o.num("value"));
    if (kind == "uniform") return Distribution::uniform(o.num("lo"), o.num("hi"));
    if (kind == "lognormal") return Distribution::lognormal(o.num("median"), o.num("sigma"));
    bad(o.path("kind"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    bad(path);
  }
}

WorldProfile ScenarioConfig::world_profile() const { return WorldProfile{provider_profiles, network, federation}; }

const ClusterSpec* ScenarioConfig::find_cluster(std::string_view cluster) const {
  for (const auto& c : clusters) {
    if (c.name == cluster) return &c;
  }
  return nullptr;
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.name.empty()) bad("name");
  if (!(cfg.duration_min > 0.0)) bad("duration_min");
  if (!(cfg.warmup_s >= 0.0)) bad("warmup_s");
  if (cfg.sample_cadence_ms == 0) bad("sample_cadence_ms");
  if (!(cfg.provisioning_timeout_s > 0.0)) bad("provisioning_timeout_s");
  if (!(cfg.qos_threshold_ms > 0.0)) bad("qos_threshold_ms");
  if (cfg.clusters.empty()) bad("clusters");

  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.clusters.size(); ++i) {
    const auto& c = cfg.clusters[i];
    const auto p = index("clusters", i);
    if (c.name.empty() || !names.insert(c.name).second) bad(p + ".name");
    if (c.node_count < 1) bad(p + ".node_count");
    if (c.flavor.vcpus <= 0 || c.flavor.ram_mb <= 0 || c.flavor.disk_gb <= 0) bad(p + ".flavor");
    if (c.pod_cidr.length == 0 || c.pod_cidr.length > 24) bad(p + ".pod_cidr");
    if (!cfg.provider_profiles.contains(c.distribution)) {
      bad(fmt::format("provider_profiles.{}", to_string(c.distribution)));
    }
  }
  const auto known = [&](const std::string& n) { return names.contains(n); };

  for (std::size_t i = 0; i < cfg.links.size(); ++i) {
    const auto& l = cfg.links[i];
    const auto p = index("links", i);
    if (!known(l.a)) bad(p + ".a");
    if (!known(l.b) || l.b == l.a) bad(p + ".b");
    if (!(l.bandwidth_mbps > 0.0)) bad(p + ".bandwidth_mbps");
    if (!(l.loss_rate >= 0.0 && l.loss_rate < 1.0)) bad(p + ".loss_rate");
  }
  for (std::size_t i = 0; i < cfg.peerings.size(); ++i) {
    const auto& pc = cfg.peerings[i];
    const auto p = index("peerings", i);
    if (!known(pc.consumer)) bad(p + ".consumer");
    if (!known(pc.provider) || pc.provider == pc.consumer) bad(p + ".provider");
    if (pc.share && !(*pc.share > 0.0 && *pc.share <= 1.0)) bad(p + ".share");
    if (pc.teardown_after_s && !(*pc.teardown_after_s >= 0.0)) bad(p + ".teardown_after_s");
  }
  for (std::size_t i = 0; i < cfg.offloads.size(); ++i) {
    const auto& oc = cfg.offloads[i];
    const auto p = index("offloads", i);
    const auto* origin = cfg.find_cluster(oc.origin);
    if (origin == nullptr) bad(p + ".origin");
    if (std::find(origin->namespaces.begin(), origin->namespaces.end(), oc.ns) == origin->namespaces.end()) {
      bad(p + ".namespace");
    }
    if (oc.targets.empty()) bad(p + ".targets");
    for (std::size_t t = 0; t < oc.targets.size(); ++t) {
      if (!known(oc.targets[t]) || oc.targets[t] == oc.origin) bad(index(p + ".targets", t));
    }
  }

  const std::pair<const char*, const ComponentSpec*> comps[] = {
      {"renderer", &cfg.pipeline.renderer}, {"streamer", &cfg.pipeline.streamer}, {"client", &cfg.pipeline.client}};
  for (const auto& [role, c] : comps) {
    const auto p = fmt::format("pipeline.{}", role);
    if (!known(c->cluster)) bad(p + ".cluster");
    if (c->ns.empty()) bad(p + ".namespace");
    if (!(c->cpu_demand >= 0.0)) bad(p + ".cpu_cores");
    if (c->mem_mb < 0) bad(p + ".mem_mb");
  }
  if (cfg.pipeline.frame_interval_ms == 0) bad("pipeline.frame_interval_ms");
  if (cfg.pipeline.frame_bytes < 0) bad("pipeline.frame_bytes");
  if (!(cfg.pipeline.contention_sigma_gain >= 0.0)) bad("pipeline.contention_sigma_gain");
  if (!(cfg.usage.noise_sigma >= 0.0)) bad("usage.noise_sigma");
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  json j;
  j["version"] = kConfigVersion;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["duration_min"] = cfg.duration_min;
  j["warmup_s"] = cfg.warmup_s;
  j["sample_cadence_ms"] = cfg.sample_cadence_ms;
  j["provisioning_timeout_s"] = cfg.provisioning_timeout_s;
  j["qos_threshold_ms"] = cfg.qos_threshold_ms;
  j["exposure"] = to_string(cfg.exposure);

  j["clusters"] = json::array();
  for (const auto& c : cfg.clusters) j["clusters"].push_back(to_json(c));
  j["provider_profiles"] = json::object();
  for (const auto& [d, p] : cfg.provider_profiles) j["provider_profiles"][std::string(to_string(d))] = to_json(p);
  j["network"] = to_json(cfg.network);
  j["federation"] = to_json(cfg.federation);

  j["links"] = json::array();
  for (const auto& l : cfg.links) {
    j["links"].push_back({{"a", l.a},
                          {"b", l.b},
                          {"latency_ms", to_json(l.latency_ms)},
                          {"bandwidth_mbps", l.bandwidth_mbps},
                          {"loss_rate", l.loss_rate}});
  }
  j["peerings"] = json::array();
  for (const auto& p : cfg.peerings) {
    json pj = {{"consumer", p.consumer}, {"provider", p.provider}, {"mode", to_string(p.mode)}};
    if (p.share) pj["share"] = *p.share;
    if (p.teardown_after_s) pj["teardown_after_s"] = *p.teardown_after_s;
    j["peerings"].push_back(std::move(pj));
  }
  j["offloads"] = json::array();
  for (const auto& o : cfg.offloads) {
    j["offloads"].push_back(
        {{"origin", o.origin}, {"namespace", o.ns}, {"targets", o.targets}, {"policy", to_string(o.policy)}});
  }
  j["pipeline"] = {{"renderer", to_json(cfg.pipeline.renderer)},
                   {"streamer", to_json(cfg.pipeline.streamer)},
                   {"client", to_json(cfg.pipeline.client)},
                   {"frame_interval_ms", cfg.pipeline.frame_interval_ms},
                   {"frame_bytes", cfg.pipeline.frame_bytes},
                   {"contention_sigma_gain", cfg.pipeline.contention_sigma_gain}};
  json regions = json::object();
  for (const auto& [r, b] : cfg.usage.regions) regions[r] = {{"cpu_pct", b.cpu_pct}, {"mem_pct", b.mem_pct}};
  j["usage"] = {{"noise_sigma", cfg.usage.noise_sigma}, {"regions", regions}};
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& doc) {
  const Obj root(doc, "");
  if (root.str_or("version", std::string(kConfigVersion)) != kConfigVersion) bad("version");
  ScenarioConfig cfg;
  cfg.name = root.str("name");
  cfg.seed = root.u64_or("seed", cfg.seed);
  cfg.duration_min = root.num("duration_min");
  cfg.warmup_s = root.num_or("warmup_s", cfg.warmup_s);
  cfg.sample_cadence_ms = root.u64_or("sample_cadence_ms", cfg.sample_cadence_ms);
  cfg.provisioning_timeout_s = root.num_or("provisioning_timeout_s", cfg.provisioning_timeout_s);
  cfg.qos_threshold_ms = root.num_or("qos_threshold_ms", cfg.qos_threshold_ms);
  if (root.has("exposure")) {
    const auto e = parse_exposure(root.str("exposure"));
    if (!e) bad("exposure");
    cfg.exposure = *e;
  }

  root.each("clusters", [&](const json& j, const std::string& p) { cfg.clusters.push_back(cluster_from(Obj(j, p))); });
  if (root.has("provider_profiles")) {
    const auto pp = root.obj("provider_profiles");
    for (const auto& [key, value] : root.raw("provider_profiles").items()) {
      const auto d = parse_kube_distribution(key);
      if (!d) bad(pp.path(key));
      cfg.provider_profiles[*d] = provider_from(Obj(value, pp.path(key)), *d);
    }
  }
  if (root.has("network")) cfg.network = network_from(root.obj("network"));
  if (root.has("federation")) cfg.federation = federation_from(root.obj("federation"));

  root.each("links", [&](const json& j, const std::string& p) {
    const Obj o(j, p);
    LinkConfig l;
    l.a = o.str("a");
    l.b = o.str("b");
    l.latency_ms = distribution_from_json(o.raw("latency_ms"), o.path("latency_ms"));
    l.bandwidth_mbps = o.num_or("bandwidth_mbps", l.bandwidth_mbps);
    l.loss_rate = o.num_or("loss_rate", l.loss_rate);
    cfg.links.push_back(std::move(l));
  });
  root.each("peerings", [&](const json& j, const std::string& p) {
    const Obj o(j, p);
    PeeringConfig pc;
    pc.consumer = o.str("consumer");
    pc.provider = o.str("provider");
    if (o.has("mode")) {
      const auto m = parse_peering_mode(o.str("mode"));
      if (!m) bad(o.path("mode"));
      pc.mode = *m;
    }
    if (o.has("share")) pc.share = o.num("share");
    if (o.has("teardown_after_s")) pc.teardown_after_s = o.num("teardown_after_s");
    cfg.peerings.push_back(std::move(pc));
  });
  root.each("offloads", [&](const json& j, const std::string& p) {
    const Obj o(j, p);
    OffloadConfig oc;
    oc.origin = o.str("origin");
    oc.ns = o.str("namespace");
    o.each("targets", [&](const json& t, const std::string& tp) { oc.targets.push_back(req_string(t, tp)); });
    if (o.has("policy")) {
      const auto pol = parse_offload_policy(o.str("policy"));
      if (!pol) bad(o.path("policy"));
      oc.policy = *pol;
    }
    cfg.offloads.push_back(std::move(oc));
  });

  const auto pj = root.obj("pipeline");
  cfg.pipeline.renderer = component_from(pj.obj("renderer"));
  cfg.pipeline.streamer = component_from(pj.obj("streamer"));
  cfg.pipeline.client = component_from(pj.obj("client"));
  cfg.pipeline.frame_interval_ms = pj.u64_or("frame_interval_ms", cfg.pipeline.frame_interval_ms);
  cfg.pipeline.frame_bytes = pj.i64_or("frame_bytes", cfg.pipeline.frame_bytes);
  cfg.pipeline.contention_sigma_gain = pj.num_or("contention_sigma_gain", cfg.pipeline.contention_sigma_gain);
  cfg.pipeline.exposure = cfg.exposure;

  if (root.has("usage")) {
    const auto u = root.obj("usage");
    cfg.usage.noise_sigma = u.num_or("noise_sigma", 0.0);
    if (u.has("regions")) {
      const auto regions = u.obj("regions");
      for (const auto& [key, value] : u.raw("regions").items()) {
        const Obj r(value, regions.path(key));
        cfg.usage.regions[key] = UsageBaseline{r.num("cpu_pct"), r.num("mem_pct")};
      }
    }
  }

  validate(cfg);
  return cfg;
}

ScenarioConfig parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfigError, fmt::format("<document>: {}", e.what()));
  }
  return scenario_from_json(doc);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const ScenarioConfig& config) { return to_json(config).dump(2) + "\n"; }

std::uint64_t resolve_seed(const ScenarioConfig& config, std::optional<std::uint64_t> cli_seed) {
  if (cli_seed) return *cli_seed;
  if (const char* env = std::getenv("FEDSIM_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') fail(ErrorCode::kConfigError, "FEDSIM_SEED");
    return v;
  }
  return config.seed;
}

}  // namespace fedsim
