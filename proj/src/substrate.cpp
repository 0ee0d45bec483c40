#include "nsp/substrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <map>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

namespace {

// Residuals may drift by round-off on non-integer demands.
constexpr double kSlack = 1e-9;

std::uint64_t fnv_mix(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv_value(std::uint64_t h, T v) {
  return fnv_mix(h, &v, sizeof(v));
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::UAP: return "uap";
    case NodeKind::Router: return "router";
    case NodeKind::Switch: return "switch";
    case NodeKind::Server: return "server";
  }
  return "unknown";
}

NodeKind parse_node_kind(std::string_view text) {
  if (text == "uap") return NodeKind::UAP;
  if (text == "router") return NodeKind::Router;
  if (text == "switch") return NodeKind::Switch;
  if (text == "server") return NodeKind::Server;
  throw ConfigError("unknown node kind '" + std::string(text) + "'");
}

std::string_view to_string(DcTier tier) {
  switch (tier) {
    case DcTier::Edge: return "edc";
    case DcTier::Core: return "cdc";
    case DcTier::Central: return "ccp";
  }
  return "unknown";
}

DcTier parse_dc_tier(std::string_view text) {
  if (text == "edc") return DcTier::Edge;
  if (text == "cdc") return DcTier::Core;
  if (text == "ccp") return DcTier::Central;
  throw ConfigError("unknown data-center tier '" + std::string(text) + "'");
}

void ResourceDelta::append(const ResourceDelta& other) {
  nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
  links.insert(links.end(), other.links.begin(), other.links.end());
}

double ResourceDelta::total_cpu() const {
  double sum = 0.0;
  for (const auto& n : nodes) sum += n.cpu;
  return sum;
}

NodeId SubstrateNetwork::add_node(NodeKind kind, double max_cpu, double max_ram,
                                  std::optional<std::size_t> dc_id) {
  if (kind != NodeKind::Server && (max_cpu != 0.0 || max_ram != 0.0)) {
    throw ConfigError("only servers carry cpu/ram capacity");
  }
  if (kind == NodeKind::Server && !(max_cpu > 0.0 && max_ram > 0.0)) {
    throw ConfigError("server capacities must be positive");
  }
  if (dc_id && *dc_id >= dcs_.size()) {
    throw ConfigError("unknown data center index " + std::to_string(*dc_id));
  }
  SubstrateNode n;
  n.id = nodes_.size();
  n.kind = kind;
  n.dc_id = dc_id;
  n.max_cpu = n.cap_cpu = max_cpu;
  n.max_ram = n.cap_ram = max_ram;
  nodes_.push_back(n);
  adjacency_.emplace_back();
  if (kind == NodeKind::Server) servers_.push_back(n.id);
  if (dc_id) {
    auto& dc = dcs_[*dc_id];
    if (kind == NodeKind::Server) dc.servers.push_back(n.id);
    if (kind == NodeKind::Switch && !dc.switch_node) dc.switch_node = n.id;
  }
  return n.id;
}

LinkId SubstrateNetwork::add_link(NodeId a, NodeId b, double max_bw,
                                  double distance_km) {
  if (a >= nodes_.size() || b >= nodes_.size()) {
    throw LookupError("link endpoint out of range");
  }
  if (a == b) throw ConfigError("self-loop links are not allowed");
  if (find_link(a, b)) throw ConfigError("duplicate link between node pair");
  if (!(max_bw > 0.0)) throw ConfigError("link bandwidth must be positive");
  SubstrateLink l;
  l.a = std::min(a, b);
  l.b = std::max(a, b);
  l.max_bw = l.cap_bw = max_bw;
  l.distance_km = distance_km;
  const LinkId id = links_.size();
  links_.push_back(l);
  adjacency_[a].push_back({b, id});
  adjacency_[b].push_back({a, id});
  auto by_node = [](const Neighbor& x, const Neighbor& y) {
    return x.node < y.node;
  };
  std::sort(adjacency_[a].begin(), adjacency_[a].end(), by_node);
  std::sort(adjacency_[b].begin(), adjacency_[b].end(), by_node);
  return id;
}

std::size_t SubstrateNetwork::add_data_center(DcTier tier) {
  dcs_.push_back({tier, std::nullopt, {}});
  return dcs_.size() - 1;
}

void SubstrateNetwork::validate() const {
  if (nodes_.empty()) throw ConfigError("substrate has no nodes");
  if (servers_.empty()) throw ConfigError("substrate has no servers");
  if (!connected()) throw ConfigError("substrate graph is not connected");
}

const SubstrateNode& SubstrateNetwork::node(NodeId n) const {
  if (n >= nodes_.size()) {
    throw LookupError("unknown node id " + std::to_string(n));
  }
  return nodes_[n];
}

const SubstrateLink& SubstrateNetwork::link(LinkId l) const {
  if (l >= links_.size()) {
    throw LookupError("unknown link id " + std::to_string(l));
  }
  return links_[l];
}

const std::vector<Neighbor>& SubstrateNetwork::neighbors(NodeId n) const {
  if (n >= nodes_.size()) {
    throw LookupError("unknown node id " + std::to_string(n));
  }
  return adjacency_[n];
}

std::optional<LinkId> SubstrateNetwork::find_link(NodeId a, NodeId b) const {
  if (a >= adjacency_.size()) return std::nullopt;
  for (const auto& nb : adjacency_[a]) {
    if (nb.node == b) return nb.link;
  }
  return std::nullopt;
}

std::optional<std::size_t> SubstrateNetwork::server_index(NodeId n) const {
  auto it = std::lower_bound(servers_.begin(), servers_.end(), n);
  if (it == servers_.end() || *it != n) return std::nullopt;
  return static_cast<std::size_t>(it - servers_.begin());
}

double SubstrateNetwork::node_outgoing_bw(NodeId n) const {
  double sum = 0.0;
  for (const auto& nb : neighbors(n)) sum += links_[nb.link].cap_bw;
  return sum;
}

double SubstrateNetwork::max_outgoing_bw(NodeId n) const {
  double sum = 0.0;
  for (const auto& nb : neighbors(n)) sum += links_[nb.link].max_bw;
  return sum;
}

double SubstrateNetwork::total_max_cpu() const {
  double sum = 0.0;
  for (NodeId s : servers_) sum += nodes_[s].max_cpu;
  return sum;
}

double SubstrateNetwork::total_max_ram() const {
  double sum = 0.0;
  for (NodeId s : servers_) sum += nodes_[s].max_ram;
  return sum;
}

double SubstrateNetwork::total_max_bw() const {
  double sum = 0.0;
  for (const auto& l : links_) sum += l.max_bw;
  return sum;
}

double SubstrateNetwork::max_server_cpu() const {
  double m = 0.0;
  for (NodeId s : servers_) m = std::max(m, nodes_[s].max_cpu);
  return m;
}

double SubstrateNetwork::max_server_ram() const {
  double m = 0.0;
  for (NodeId s : servers_) m = std::max(m, nodes_[s].max_ram);
  return m;
}

double SubstrateNetwork::max_node_outgoing_bw() const {
  double m = 0.0;
  for (NodeId n = 0; n < nodes_.size(); ++n) m = std::max(m, max_outgoing_bw(n));
  return m;
}

void SubstrateNetwork::commit(const ResourceDelta& delta) {
  std::map<NodeId, std::pair<double, double>> node_need;
  std::map<LinkId, double> link_need;
  for (const auto& n : delta.nodes) {
    node(n.node);
    if (n.cpu < 0.0 || n.ram < 0.0) throw ContractViolation("negative commit");
    auto& need = node_need[n.node];
    need.first += n.cpu;
    need.second += n.ram;
  }
  for (const auto& l : delta.links) {
    link(l.link);
    if (l.bw < 0.0) throw ContractViolation("negative commit");
    link_need[l.link] += l.bw;
  }
  for (const auto& [id, need] : node_need) {
    const auto& n = nodes_[id];
    if (need.first > n.cap_cpu || need.second > n.cap_ram) {
      std::ostringstream msg;
      msg << "insufficient cpu/ram on node " << id << " (need " << need.first
          << "/" << need.second << ", have " << n.cap_cpu << "/" << n.cap_ram
          << ")";
      throw CapacityError(msg.str());
    }
  }
  for (const auto& [id, need] : link_need) {
    if (need > links_[id].cap_bw) {
      std::ostringstream msg;
      msg << "insufficient bandwidth on link " << id << " (need " << need
          << ", have " << links_[id].cap_bw << ")";
      throw CapacityError(msg.str());
    }
  }
  for (const auto& n : delta.nodes) {
    nodes_[n.node].cap_cpu -= n.cpu;
    nodes_[n.node].cap_ram -= n.ram;
  }
  for (const auto& l : delta.links) links_[l.link].cap_bw -= l.bw;
}

void SubstrateNetwork::release(const ResourceDelta& delta) {
  std::map<NodeId, std::pair<double, double>> node_back;
  std::map<LinkId, double> link_back;
  for (const auto& n : delta.nodes) {
    node(n.node);
    auto& back = node_back[n.node];
    back.first += n.cpu;
    back.second += n.ram;
  }
  for (const auto& l : delta.links) {
    link(l.link);
    link_back[l.link] += l.bw;
  }
  for (const auto& [id, back] : node_back) {
    const auto& n = nodes_[id];
    if (n.cap_cpu + back.first > n.max_cpu * (1.0 + kSlack) + kSlack ||
        n.cap_ram + back.second > n.max_ram * (1.0 + kSlack) + kSlack) {
      throw AccountingError("release exceeds maximum capacity on node " +
                            std::to_string(id));
    }
  }
  for (const auto& [id, back] : link_back) {
    const auto& l = links_[id];
    if (l.cap_bw + back > l.max_bw * (1.0 + kSlack) + kSlack) {
      throw AccountingError("release exceeds maximum bandwidth on link " +
                            std::to_string(id));
    }
  }
  for (const auto& n : delta.nodes) {
    auto& target = nodes_[n.node];
    target.cap_cpu = std::min(target.cap_cpu + n.cpu, target.max_cpu);
    target.cap_ram = std::min(target.cap_ram + n.ram, target.max_ram);
  }
  for (const auto& l : delta.links) {
    auto& target = links_[l.link];
    target.cap_bw = std::min(target.cap_bw + l.bw, target.max_bw);
  }
}

std::vector<double> SubstrateNetwork::residuals() const {
  std::vector<double> out;
  out.reserve(2 * nodes_.size() + links_.size());
  for (const auto& n : nodes_) {
    out.push_back(n.cap_cpu);
    out.push_back(n.cap_ram);
  }
  for (const auto& l : links_) out.push_back(l.cap_bw);
  return out;
}

void SubstrateNetwork::restore_residuals(const std::vector<double>& values) {
  if (values.size() != 2 * nodes_.size() + links_.size()) {
    throw CompatibilityError("residual vector does not match substrate size");
  }
  std::size_t i = 0;
  for (auto& n : nodes_) {
    const double cpu = values[i++];
    const double ram = values[i++];
    if (cpu < 0.0 || cpu > n.max_cpu || ram < 0.0 || ram > n.max_ram) {
      throw CompatibilityError("residual outside node capacity bounds");
    }
    n.cap_cpu = cpu;
    n.cap_ram = ram;
  }
  for (auto& l : links_) {
    const double bw = values[i++];
    if (bw < 0.0 || bw > l.max_bw) {
      throw CompatibilityError("residual outside link capacity bounds");
    }
    l.cap_bw = bw;
  }
}

std::uint64_t SubstrateNetwork::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  h = fnv_value(h, nodes_.size());
  for (const auto& n : nodes_) {
    h = fnv_value(h, static_cast<int>(n.kind));
    h = fnv_value(h, n.max_cpu);
    h = fnv_value(h, n.max_ram);
  }
  h = fnv_value(h, links_.size());
  for (const auto& l : links_) {
    h = fnv_value(h, l.a);
    h = fnv_value(h, l.b);
    h = fnv_value(h, l.max_bw);
  }
  return h;
}

bool SubstrateNetwork::connected() const {
  if (nodes_.empty()) return true;
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<NodeId> queue{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (const auto& nb : adjacency_[u]) {
      if (!seen[nb.node]) {
        seen[nb.node] = true;
        ++count;
        queue.push_back(nb.node);
      }
    }
  }
  return count == nodes_.size();
}

ScaleProfile parse_scale_profile(std::string_view text) {
  if (text == "full") return ScaleProfile::Full;
  if (text == "small") return ScaleProfile::Small;
  if (text == "tiny") return ScaleProfile::Tiny;
  throw ConfigError("invalid scale profile '" + std::string(text) +
                    "' (expected full, small or tiny)");
}

TopologyCounts TopologyCounts::for_profile(ScaleProfile profile) {
  TopologyCounts c;
  switch (profile) {
    case ScaleProfile::Full:
      break;
    case ScaleProfile::Small:
      c.edc_count = 2;
      c.servers_per_edc = 2;
      c.cdc_count = 1;
      c.servers_per_cdc = 4;
      c.ccp_count = 0;
      c.servers_per_ccp = 0;
      break;
    case ScaleProfile::Tiny:
      c.edc_count = 1;
      c.servers_per_edc = 3;
      c.cdc_count = 0;
      c.servers_per_cdc = 0;
      c.ccp_count = 0;
      c.servers_per_ccp = 0;
      break;
  }
  return c;
}

SubstrateNetwork build_reference_topology(const TopologyCounts& c) {
  if (c.edc_count + c.cdc_count + c.ccp_count == 0) {
    throw ConfigError("topology needs at least one data center");
  }
  if ((c.edc_count && !c.servers_per_edc) ||
      (c.cdc_count && !c.servers_per_cdc) ||
      (c.ccp_count && !c.servers_per_ccp)) {
    throw ConfigError("every data center needs at least one server");
  }
  if (c.cdc_count && c.edcs_per_cdc == 0) {
    throw ConfigError("edcs_per_cdc must be positive");
  }

  SubstrateNetwork net;
  struct Pending {
    DcTier tier;
    std::size_t servers;
    double intra_bw;
  };
  std::vector<Pending> dcs;
  for (std::size_t i = 0; i < c.edc_count; ++i)
    dcs.push_back({DcTier::Edge, c.servers_per_edc, c.edc_intra_bw});
  for (std::size_t i = 0; i < c.cdc_count; ++i)
    dcs.push_back({DcTier::Core, c.servers_per_cdc, c.core_intra_bw});
  for (std::size_t i = 0; i < c.ccp_count; ++i)
    dcs.push_back({DcTier::Central, c.servers_per_ccp, c.core_intra_bw});

  for (const auto& dc : dcs) net.add_data_center(dc.tier);

  // Servers take the lowest ids so node id == action index; switches and
  // access points follow.
  for (std::size_t d = 0; d < dcs.size(); ++d) {
    for (std::size_t s = 0; s < dcs[d].servers; ++s) {
      net.add_node(NodeKind::Server, c.server_cpu, c.server_ram, d);
    }
  }
  std::vector<NodeId> sw(dcs.size());
  for (std::size_t d = 0; d < dcs.size(); ++d) {
    sw[d] = net.add_node(NodeKind::Switch, 0.0, 0.0, d);
  }
  for (std::size_t d = 0; d < dcs.size(); ++d) {
    for (NodeId s : net.data_centers()[d].servers) {
      net.add_link(s, sw[d], dcs[d].intra_bw);
    }
  }

  const std::size_t edc0 = 0;
  const std::size_t cdc0 = c.edc_count;
  const std::size_t ccp0 = c.edc_count + c.cdc_count;
  for (std::size_t e = 0; e < c.edc_count; ++e) {
    const std::size_t cdc = e / c.edcs_per_cdc;
    if (cdc < c.cdc_count) {
      net.add_link(sw[edc0 + e], sw[cdc0 + cdc], c.edc_transport_bw, 100.0);
    } else if (c.ccp_count > 0) {
      net.add_link(sw[edc0 + e], sw[ccp0], c.edc_transport_bw, 300.0);
    }
  }
  if (c.cdc_count == 2) {
    net.add_link(sw[cdc0], sw[cdc0 + 1], c.core_transport_bw);
  } else if (c.cdc_count > 2) {
    for (std::size_t i = 0; i < c.cdc_count; ++i) {
      net.add_link(sw[cdc0 + i], sw[cdc0 + (i + 1) % c.cdc_count],
                   c.core_transport_bw);
    }
  }
  for (std::size_t i = 0; i < c.cdc_count; ++i) {
    for (std::size_t p = 0; p < c.ccp_count; ++p) {
      net.add_link(sw[cdc0 + i], sw[ccp0 + p], c.core_transport_bw, 300.0);
    }
  }
  if (c.cdc_count == 0 && c.ccp_count > 1) {
    for (std::size_t p = 1; p < c.ccp_count; ++p) {
      net.add_link(sw[ccp0 + p - 1], sw[ccp0 + p], c.core_transport_bw);
    }
  }
  for (std::size_t e = 0; e < c.edc_count; ++e) {
    for (std::size_t u = 0; u < c.uaps_per_edc; ++u) {
      const NodeId uap = net.add_node(NodeKind::UAP);
      net.add_link(uap, sw[edc0 + e], c.access_bw);
    }
  }
  net.validate();
  return net;
}

SubstrateNetwork build_reference_topology(ScaleProfile profile) {
  return build_reference_topology(TopologyCounts::for_profile(profile));
}

}  // namespace nsp
