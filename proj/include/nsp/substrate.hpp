#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nsp {

using NodeId = std::size_t;
using LinkId = std::size_t;

enum class NodeKind { UAP, Router, Switch, Server };

std::string_view to_string(NodeKind kind);
NodeKind parse_node_kind(std::string_view text);

enum class DcTier { Edge, Core, Central };

std::string_view to_string(DcTier tier);
DcTier parse_dc_tier(std::string_view text);

struct SubstrateNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::Server;
  std::optional<std::size_t> dc_id;
  double cap_cpu = 0.0;
  double cap_ram = 0.0;
  double max_cpu = 0.0;
  double max_ram = 0.0;

  bool is_server() const { return kind == NodeKind::Server; }
};

struct SubstrateLink {
  NodeId a = 0;
  NodeId b = 0;
  double cap_bw = 0.0;
  double max_bw = 0.0;
  // Metadata only; no latency model consumes it.
  double distance_km = 0.0;

  NodeId other(NodeId n) const { return n == a ? b : a; }
};

struct DataCenter {
  DcTier tier = DcTier::Edge;
  std::optional<NodeId> switch_node;
  std::vector<NodeId> servers;
};

struct Neighbor {
  NodeId node = 0;
  LinkId link = 0;
};

/// A set of per-node cpu/ram amounts and per-link bandwidth amounts.
/// Used both as a commit request and as the ledger that undoes it.
struct ResourceDelta {
  struct NodeAmount {
    NodeId node = 0;
    double cpu = 0.0;
    double ram = 0.0;
  };
  struct LinkAmount {
    LinkId link = 0;
    double bw = 0.0;
  };

  std::vector<NodeAmount> nodes;
  std::vector<LinkAmount> links;

  bool empty() const { return nodes.empty() && links.empty(); }
  void append(const ResourceDelta& other);
  double total_cpu() const;
};

/// Physical substrate: typed nodes, capacitated undirected links and
/// residual accounting. Mutation goes through commit/release only.
class SubstrateNetwork {
 public:
  NodeId add_node(NodeKind kind, double max_cpu = 0.0, double max_ram = 0.0,
                  std::optional<std::size_t> dc_id = std::nullopt);
  LinkId add_link(NodeId a, NodeId b, double max_bw, double distance_km = 0.0);
  /// Declares a DC; servers and its switch join it via add_node's dc_id.
  std::size_t add_data_center(DcTier tier);

  /// Throws ConfigError unless the graph is connected and well formed.
  void validate() const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }
  const SubstrateNode& node(NodeId n) const;
  const SubstrateLink& link(LinkId l) const;
  const std::vector<SubstrateNode>& nodes() const { return nodes_; }
  const std::vector<SubstrateLink>& links() const { return links_; }
  const std::vector<Neighbor>& neighbors(NodeId n) const;
  const std::vector<NodeId>& servers() const { return servers_; }
  const std::vector<DataCenter>& data_centers() const { return dcs_; }
  std::optional<LinkId> find_link(NodeId a, NodeId b) const;

  /// Position of a server in servers(), i.e. its action index.
  std::optional<std::size_t> server_index(NodeId n) const;

  /// Sum of residual bandwidth over links incident to n.
  double node_outgoing_bw(NodeId n) const;
  /// Sum of maximum bandwidth over links incident to n (M^bw).
  double max_outgoing_bw(NodeId n) const;

  double total_max_cpu() const;
  double total_max_ram() const;
  double total_max_bw() const;
  double max_server_cpu() const;
  double max_server_ram() const;
  double max_node_outgoing_bw() const;

  /// All-or-nothing decrement. Throws CapacityError and leaves the
  /// network unchanged if any residual would become negative.
  void commit(const ResourceDelta& delta);
  /// Inverse of commit. Throws AccountingError if a residual would
  /// exceed its maximum; the network is left unchanged in that case.
  void release(const ResourceDelta& delta);

  /// Residuals as a flat vector: cpu,ram per node then bw per link.
  std::vector<double> residuals() const;
  void restore_residuals(const std::vector<double>& values);

  /// Hash over structure and maximum capacities, not residuals.
  std::uint64_t fingerprint() const;

  bool connected() const;

 private:
  std::vector<SubstrateNode> nodes_;
  std::vector<SubstrateLink> links_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<NodeId> servers_;
  std::vector<DataCenter> dcs_;
};

enum class ScaleProfile { Full, Small, Tiny };

ScaleProfile parse_scale_profile(std::string_view text);

/// Explicit sizing of the three-tier reference layout.
struct TopologyCounts {
  std::size_t edc_count = 15;
  std::size_t servers_per_edc = 4;
  std::size_t cdc_count = 5;
  std::size_t servers_per_cdc = 10;
  std::size_t ccp_count = 1;
  std::size_t servers_per_ccp = 16;
  std::size_t uaps_per_edc = 0;

  double server_cpu = 50.0;
  double server_ram = 300.0;
  double edc_intra_bw = 10.0;
  double core_intra_bw = 100.0;
  double edc_transport_bw = 10.0;
  double core_transport_bw = 100.0;
  double access_bw = 10.0;
  std::size_t edcs_per_cdc = 3;

  static TopologyCounts for_profile(ScaleProfile profile);
};

/// Star-wired data centers: each DC is one switch with its servers; EDC
/// switches hang off CDC switches (CDC i serves EDCs i*k..i*k+k-1), CDCs
/// form a ring and each links to every CCP switch.
SubstrateNetwork build_reference_topology(const TopologyCounts& counts);
SubstrateNetwork build_reference_topology(ScaleProfile profile);

}  // namespace nsp
