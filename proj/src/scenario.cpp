#include "nsp/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// A JSON object together with its path, for error messages.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(path_ + ": " + what);
  }
  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(at(key) + ": required field is missing");
    return j_.at(key);
  }
  Section child(const std::string& key) const { return Section(raw(key), at(key)); }

  template <class T>
  T get(const std::string& key) const {
    try {
      return raw(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key) + ": has the wrong type");
    }
  }
  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }
  double positive(const std::string& key) const {
    const double v = get<double>(key);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(at(key) + ": must be > 0");
    return v;
  }

 private:
  const json& j_;
  std::string path_;
};

TopologyCounts counts_with_overrides(const Section& topo) {
  const auto profile_name = topo.get<std::string>("profile");
  TopologyCounts c;
  try {
    c = TopologyCounts::for_profile(parse_scale_profile(profile_name));
  } catch (const ConfigError& e) {
    throw ConfigError(topo.at("profile") + ": " + e.what());
  }
  if (!topo.has("overrides")) return c;
  const auto o = topo.child("overrides");
  c.edc_count = o.get("edc_count", c.edc_count);
  c.servers_per_edc = o.get("servers_per_edc", c.servers_per_edc);
  c.cdc_count = o.get("cdc_count", c.cdc_count);
  c.servers_per_cdc = o.get("servers_per_cdc", c.servers_per_cdc);
  c.ccp_count = o.get("ccp_count", c.ccp_count);
  c.servers_per_ccp = o.get("servers_per_ccp", c.servers_per_ccp);
  c.uaps_per_edc = o.get("uaps_per_edc", c.uaps_per_edc);
  c.server_cpu = o.get("server_cpu", c.server_cpu);
  c.server_ram = o.get("server_ram", c.server_ram);
  c.edc_intra_bw = o.get("edc_intra_bw", c.edc_intra_bw);
  c.core_intra_bw = o.get("core_intra_bw", c.core_intra_bw);
  c.edc_transport_bw = o.get("edc_transport_bw", c.edc_transport_bw);
  c.core_transport_bw = o.get("core_transport_bw", c.core_transport_bw);
  c.access_bw = o.get("access_bw", c.access_bw);
  c.edcs_per_cdc = o.get("edcs_per_cdc", c.edcs_per_cdc);
  return c;
}

SubstrateNetwork explicit_topology(const Section& topo) {
  SubstrateNetwork net;
  if (topo.has("data_centers")) {
    const auto& dcs = topo.raw("data_centers");
    for (std::size_t i = 0; i < dcs.size(); ++i) {
      const Section dc(dcs[i], topo.at("data_centers") + "[" + std::to_string(i) + "]");
      try {
        net.add_data_center(parse_dc_tier(dc.get<std::string>("tier")));
      } catch (const ConfigError& e) {
        dc.fail(e.what());
      }
    }
  }
  const auto& nodes = topo.raw("nodes");
  if (!nodes.is_array()) throw ConfigError(topo.at("nodes") + ": expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Section n(nodes[i], topo.at("nodes") + "[" + std::to_string(i) + "]");
    try {
      std::optional<std::size_t> dc;
      if (n.has("dc")) dc = n.get<std::size_t>("dc");
      net.add_node(parse_node_kind(n.get<std::string>("kind")), n.get("cpu", 0.0),
                   n.get("ram", 0.0), dc);
    } catch (const std::exception& e) {
      n.fail(e.what());
    }
  }
  const auto& links = topo.raw("links");
  if (!links.is_array()) throw ConfigError(topo.at("links") + ": expected an array");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Section l(links[i], topo.at("links") + "[" + std::to_string(i) + "]");
    try {
      net.add_link(l.get<NodeId>("a"), l.get<NodeId>("b"), l.get<double>("bw"),
                   l.get("km", 0.0));
    } catch (const std::exception& e) {
      l.fail(e.what());
    }
  }
  try {
    net.validate();
  } catch (const std::exception& e) {
    topo.fail(e.what());
  }
  return net;
}

SubstrateNetwork parse_topology(const Section& topo) {
  if (topo.has("profile")) {
    const auto counts = counts_with_overrides(topo);
    try {
      return build_reference_topology(counts);
    } catch (const std::exception& e) {
      topo.fail(e.what());
    }
  }
  if (topo.has("nodes")) return explicit_topology(topo);
  topo.fail("needs either a profile or explicit nodes and links");
}

SliceClass parse_class(const Section& c) {
  SliceClass k;
  k.id = c.get<int>("id");
  k.name = c.get<std::string>("name", "class-" + std::to_string(k.id));
  k.vnf_count = c.get<std::size_t>("vnfs");
  k.req_cpu = c.get<double>("cpu");
  k.req_ram = c.get<double>("ram");
  k.req_bw = c.get<double>("bw");
  k.mean_lifetime = c.positive("lifetime");
  const auto a = c.child("arrival");
  const auto kind = a.get<std::string>("kind");
  if (kind == "static") {
    k.arrival = StaticArrival{a.get<double>("rate")};
  } else if (kind == "dynamic") {
    k.arrival = DynamicArrival{a.get<double>("amplitude"), a.positive("period")};
  } else {
    throw ConfigError(a.at("kind") + ": expected static or dynamic");
  }
  try {
    k.validate();
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
  return k;
}

json class_to_json(const SliceClass& k) {
  json arrival;
  if (const auto* s = std::get_if<StaticArrival>(&k.arrival)) {
    arrival = {{"kind", "static"}, {"rate", s->rate}};
  } else {
    const auto& d = std::get<DynamicArrival>(k.arrival);
    arrival = {{"kind", "dynamic"}, {"amplitude", d.amplitude}, {"period", d.period}};
  }
  return {{"id", k.id},   {"name", k.name},         {"vnfs", k.vnf_count},
          {"cpu", k.req_cpu}, {"ram", k.req_ram},   {"bw", k.req_bw},
          {"lifetime", k.mean_lifetime}, {"arrival", arrival}};
}

void scale_rates(SliceClass& k, double factor) {
  if (auto* s = std::get_if<StaticArrival>(&k.arrival)) {
    s->rate *= factor;
  } else {
    std::get<DynamicArrival>(k.arrival).amplitude *= factor;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ResourceTotals Scenario::capacity() const {
  return {network.total_max_cpu(), network.total_max_ram(), network.total_max_bw()};
}

std::vector<SliceClass> Scenario::scaled_classes() const {
  auto out = classes;
  for (auto& k : out) scale_rates(k, rate_scale);
  return out;
}

std::shared_ptr<const LoadModel> Scenario::load_model() const {
  return std::make_shared<const LoadModel>(scaled_classes(), capacity());
}

GeneratorOptions Scenario::generator_options() const {
  GeneratorOptions o;
  o.lifetime = lifetime;
  return o;
}

void Scenario::validate() const {
  if (classes.empty()) throw ConfigError("classes: at least one slice class is required");
  try {
    LoadModel(scaled_classes(), capacity()).validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("classes: ") + e.what());
  }
  if (phase_size == 0) throw ConfigError("simulation.phase_size: must be > 0");
  if (seeds.empty()) throw ConfigError("simulation.seeds: seed list is empty");
  if (!(horizon > 0.0)) throw ConfigError("simulation.horizon: must be > 0");
  if (arrivals == 0 && std::isinf(horizon)) {
    throw ConfigError("simulation: needs a finite horizon or arrival count");
  }
  if (replay_events && !fs::exists(*replay_events)) {
    throw ConfigError("traffic.replay: file " + *replay_events + " does not exist");
  }
  try {
    agent.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("agent: ") + e.what());
  }
}

Scenario parse_scenario(const json& doc, const std::string& base_dir) {
  const Section root(doc, "scenario");
  Scenario s;
  s.name = root.get<std::string>("name", s.name);

  const auto topo = Section(root.raw("topology"), "topology");
  s.topology = root.raw("topology");
  s.network = parse_topology(topo);

  const auto& classes = root.raw("classes");
  if (!classes.is_array()) throw ConfigError("classes: expected an array");
  if (root.has("traffic")) {
    const auto traffic = root.child("traffic");
    s.rate_scale = traffic.has("rate_scale") ? traffic.positive("rate_scale") : 1.0;
    const auto dist = traffic.get<std::string>("lifetime", "exponential");
    if (dist == "exponential") {
      s.lifetime = LifetimeDistribution::Exponential;
    } else if (dist == "deterministic") {
      s.lifetime = LifetimeDistribution::Deterministic;
    } else {
      throw ConfigError("traffic.lifetime: expected exponential or deterministic");
    }
    if (traffic.has("replay")) {
      fs::path p = traffic.get<std::string>("replay");
      if (p.is_relative()) p = fs::path(base_dir) / p;
      s.replay_events = p.lexically_normal().string();
    }
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    s.classes.push_back(parse_class(Section(classes[i], "classes[" + std::to_string(i) + "]")));
  }

  if (root.has("simulation")) {
    const auto sim = root.child("simulation");
    s.arrivals = sim.get("arrivals", s.arrivals);
    if (sim.has("horizon") && !sim.raw("horizon").is_null()) {
      s.horizon = sim.positive("horizon");
    }
    s.phase_size = sim.get("phase_size", s.phase_size);
    s.seeds = sim.get("seeds", s.seeds);
  }
  if (root.has("agent")) {
    try {
      s.agent = AgentConfig::from_json(root.raw("agent"));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("agent: ") + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("agent: ") + e.what());
    }
  }
  if (root.has("output")) {
    s.output_dir = root.child("output").get("directory", s.output_dir);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": parse error: " + e.what());
  }
  if (doc.is_object() && doc.contains("scenario") && doc.contains("scenario_hash")) {
    doc = doc.at("scenario");
  }
  const auto base = fs::path(path).parent_path().string();
  return parse_scenario(doc, base.empty() ? "." : base);
}

json scenario_to_json(const Scenario& s) {
  json classes = json::array();
  for (const auto& k : s.classes) classes.push_back(class_to_json(k));
  json traffic = {{"rate_scale", s.rate_scale},
                  {"lifetime", s.lifetime == LifetimeDistribution::Exponential
                                   ? "exponential"
                                   : "deterministic"}};
  if (s.replay_events) traffic["replay"] = fs::absolute(*s.replay_events).string();
  json sim = {{"arrivals", s.arrivals}, {"phase_size", s.phase_size}, {"seeds", s.seeds}};
  sim["horizon"] = std::isinf(s.horizon) ? json(nullptr) : json(s.horizon);
  return {{"name", s.name},
          {"topology", s.topology},
          {"classes", classes},
          {"traffic", traffic},
          {"simulation", sim},
          {"agent", s.agent.to_json()},
          {"output", {{"directory", s.output_dir}}}};
}

std::string scenario_hash(const Scenario& s) {
  json doc = scenario_to_json(s);
  doc.erase("output");
  doc.erase("name");
  doc["topology"] = {{"fingerprint", s.network.fingerprint()}};
  // The rates actually used, so equivalent scale/rate splits hash alike.
  doc["classes"] = json::array();
  for (const auto& k : s.scaled_classes()) doc["classes"].push_back(class_to_json(k));
  doc["traffic"].erase("rate_scale");
  if (s.replay_events) doc["traffic"]["replay"] = fnv1a(read_file(*s.replay_events));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(doc.dump())));
  return buf;
}

}  // namespace nsp
