#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsp/errors.hpp"
#include "nsp/substrate.hpp"
#include "support.hpp"

using namespace nsp;

TEST_CASE("full reference topology sizes") {
  const auto net = build_reference_topology(ScaleProfile::Full);
  CHECK(net.servers().size() == 126);
  CHECK(net.total_max_cpu() == 6300.0);
  CHECK(net.connected());
  for (auto s : net.servers()) {
    CHECK(net.node(s).max_cpu == 50.0);
    CHECK(net.node(s).max_ram == 300.0);
    CHECK(net.node(s).cap_cpu == 50.0);
  }
  // 15 + 5 + 1 DCs, one switch each.
  CHECK(net.data_centers().size() == 21);
  CHECK(net.node_count() == 126 + 21);
}

TEST_CASE("full topology wiring") {
  const auto net = build_reference_topology(ScaleProfile::Full);
  const auto& dcs = net.data_centers();
  std::vector<std::size_t> edc, cdc, ccp;
  for (std::size_t d = 0; d < dcs.size(); ++d) {
    (dcs[d].tier == DcTier::Edge ? edc : dcs[d].tier == DcTier::Core ? cdc : ccp).push_back(d);
  }
  REQUIRE(edc.size() == 15);
  REQUIRE(cdc.size() == 5);
  REQUIRE(ccp.size() == 1);

  auto sw = [&](std::size_t d) { return *dcs[d].switch_node; };
  for (auto d : edc) {
    CHECK(dcs[d].servers.size() == 4);
    for (auto s : dcs[d].servers) CHECK(net.link(*net.find_link(s, sw(d))).max_bw == 10.0);
  }
  for (auto d : cdc) {
    CHECK(dcs[d].servers.size() == 10);
    for (auto s : dcs[d].servers) CHECK(net.link(*net.find_link(s, sw(d))).max_bw == 100.0);
  }
  CHECK(dcs[ccp[0]].servers.size() == 16);

  for (std::size_t i = 0; i < cdc.size(); ++i) {
    // Three EDCs per CDC, 10 Gbps each.
    for (std::size_t e = 3 * i; e < 3 * i + 3; ++e) {
      auto l = net.find_link(sw(cdc[i]), sw(edc[e]));
      REQUIRE(l);
      CHECK(net.link(*l).max_bw == 10.0);
    }
    auto ring = net.find_link(sw(cdc[i]), sw(cdc[(i + 1) % cdc.size()]));
    REQUIRE(ring);
    CHECK(net.link(*ring).max_bw == 100.0);
    auto up = net.find_link(sw(cdc[i]), sw(ccp[0]));
    REQUIRE(up);
    CHECK(net.link(*up).max_bw == 100.0);
  }
}

TEST_CASE("small and tiny profiles") {
  const auto small = build_reference_topology(ScaleProfile::Small);
  CHECK(small.servers().size() == 8);
  CHECK(small.total_max_cpu() == 400.0);
  CHECK(small.connected());

  const auto tiny = build_reference_topology(ScaleProfile::Tiny);
  CHECK(tiny.servers().size() == 3);
  CHECK(tiny.node_count() == 4);
  CHECK(tiny.connected());
  const auto sw = *tiny.data_centers().at(0).switch_node;
  CHECK(tiny.neighbors(sw).size() == 3);
}

TEST_CASE("profile parsing") {
  CHECK(parse_scale_profile("full") == ScaleProfile::Full);
  CHECK(parse_scale_profile("tiny") == ScaleProfile::Tiny);
  CHECK_THROWS_AS(parse_scale_profile("huge"), ConfigError);
  TopologyCounts none;
  none.edc_count = none.cdc_count = none.ccp_count = 0;
  CHECK_THROWS_AS(build_reference_topology(none), ConfigError);
}

TEST_CASE("node outgoing bandwidth") {
  SubstrateNetwork net;
  const auto lone = net.add_node(NodeKind::Router);
  CHECK(net.node_outgoing_bw(lone) == 0.0);
  CHECK_THROWS_AS(net.node_outgoing_bw(99), LookupError);

  auto s = testing::star(2, 50, 300, 10);
  CHECK(s.node_outgoing_bw(0) == 10.0);

  // CCP server after a 2 Gbps commitment on its only link.
  auto full = build_reference_topology(ScaleProfile::Full);
  const auto& ccp = full.data_centers().back();
  REQUIRE(ccp.tier == DcTier::Central);
  const auto server = ccp.servers.front();
  const auto link = *full.find_link(server, *ccp.switch_node);
  full.commit({{}, {{link, 2.0}}});
  CHECK(full.node_outgoing_bw(server) == 100.0 - 2.0);
}

TEST_CASE("commit and release") {
  auto net = testing::star(3, 50, 300, 10);
  const auto before = net.residuals();

  net.commit({{{0, 25, 0}}, {}});
  CHECK(net.node(0).cap_cpu == 25.0);

  SUBCASE("overdraw is rejected and leaves state untouched") {
    const auto mid = net.residuals();
    CHECK_THROWS_AS(net.commit({{{0, 60, 0}}, {}}), CapacityError);
    CHECK(net.residuals() == mid);
  }
  SUBCASE("atomic across nodes and links") {
    net.commit({{}, {{0, 9}}});
    const auto mid = net.residuals();
    CHECK_THROWS_AS(net.commit({{{1, 25, 0}}, {{0, 2}}}), CapacityError);
    CHECK(net.node(1).cap_cpu == 50.0);
    CHECK(net.residuals() == mid);
    net.release({{}, {{0, 9}}});
  }
  SUBCASE("release above max is an accounting error") {
    const auto mid = net.residuals();
    CHECK_THROWS_AS(net.release({{{1, 25, 0}}, {}}), AccountingError);
    CHECK(net.residuals() == mid);
  }
  net.release({{{0, 25, 0}}, {}});
  CHECK(net.residuals() == before);
}

TEST_CASE("commit then release is bitwise identity") {
  auto net = testing::star(3, 50, 300, 10);
  net.commit({{{2, 0.1, 0.7}}, {}});  // non-representable amounts first
  const auto before = net.residuals();
  ResourceDelta d{{{0, 12.3, 45.6}, {1, 7.7, 0.3}, {2, 1e-3, 99.9}},
                  {{0, 3.3}, {2, 0.7}}};
  net.commit(d);
  net.release(d);
  CHECK(net.residuals() == before);
}

TEST_CASE("structural validation") {
  SubstrateNetwork net;
  const auto a = net.add_node(NodeKind::Server, 10, 10);
  const auto b = net.add_node(NodeKind::Switch);
  CHECK_THROWS(net.add_link(a, a, 1));
  net.add_link(a, b, 1);
  CHECK_THROWS(net.add_link(b, a, 1));
  net.add_node(NodeKind::Server, 10, 10);  // disconnected
  CHECK_FALSE(net.connected());
  CHECK_THROWS_AS(net.validate(), ConfigError);
}

TEST_CASE("fingerprint tracks structure, not residuals") {
  auto a = testing::star(3, 50, 300, 10);
  const auto f = a.fingerprint();
  a.commit({{{0, 5, 5}}, {}});
  CHECK(a.fingerprint() == f);
  CHECK(testing::star(3, 50, 300, 100).fingerprint() != f);
  CHECK(testing::star(4, 50, 300, 10).fingerprint() != f);
}
