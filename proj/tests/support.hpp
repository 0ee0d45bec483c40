#pragma once

// Fixtures shared by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "nsp/substrate.hpp"
#include "nsp/traffic.hpp"

namespace nsp::testing {

inline SliceClass volatile_class() {
  SliceClass k;
  k.id = 0;
  k.name = "volatile";
  k.vnf_count = 5;
  k.req_cpu = 25;
  k.req_ram = 150;
  k.req_bw = 2;
  k.mean_lifetime = 20;
  k.arrival = DynamicArrival{1.5, 96};
  return k;
}

inline SliceClass long_term_class() {
  SliceClass k;
  k.id = 1;
  k.name = "long-term";
  k.vnf_count = 10;
  k.req_cpu = 25;
  k.req_ram = 150;
  k.req_bw = 2;
  k.mean_lifetime = 500;
  k.arrival = StaticArrival{0.02};
  return k;
}

inline ResourceTotals totals_of(const SubstrateNetwork& net) {
  return {net.total_max_cpu(), net.total_max_ram(), net.total_max_bw()};
}

inline LoadModel reference_model() {
  return LoadModel({volatile_class(), long_term_class()},
                   totals_of(build_reference_topology(ScaleProfile::Full)));
}

/// One switch with the given servers hanging off it; every link has bw.
inline SubstrateNetwork star(std::size_t servers, double cpu, double ram, double bw) {
  SubstrateNetwork net;
  const auto dc = net.add_data_center(DcTier::Edge);
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < servers; ++i) {
    ids.push_back(net.add_node(NodeKind::Server, cpu, ram, dc));
  }
  const auto sw = net.add_node(NodeKind::Switch, 0, 0, dc);
  for (auto s : ids) net.add_link(s, sw, bw);
  net.validate();
  return net;
}

inline SliceRequest chain(std::vector<VnfDemand> vnfs, std::vector<double> vls,
                          std::uint64_t uid = 0) {
  SliceRequest r;
  r.uid = uid;
  r.lifetime = 1.0;
  r.vnfs = std::move(vnfs);
  r.vls = std::move(vls);
  return r;
}

}  // namespace nsp::testing
