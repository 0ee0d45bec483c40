#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nsp/heuristic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsp;
using nsp::testing::chain;
using nsp::testing::star;

TEST_CASE("empty substrate picks the lowest-id server") {
  auto net = build_reference_topology(ScaleProfile::Full);
  PlacementEpisode ep(make_request(nsp::testing::volatile_class(), 0, 0, 1), net);
  const auto a = heu_select(ep, net);
  REQUIRE(a.server);
  CHECK(*a.server == net.servers().front());
}

TEST_CASE("prefers the emptiest server, then co-location") {
  auto net = star(3, 50, 300, 10);
  net.commit({{{0, 10, 0}, {2, 10, 0}}, {}});
  PlacementEpisode ep(chain({{10, 10}, {10, 10}}, {1}), net);
  auto a = heu_select(ep, net);
  REQUIRE(a.server);
  CHECK(*a.server == 1);
  ep.apply_action(net, *a.server);
  // Server 1 still scores as empty for this request and is co-located.
  a = heu_select(ep, net);
  REQUIRE(a.server);
  CHECK(*a.server == 1);
}

TEST_CASE("no feasible server") {
  auto net = star(2, 5, 5, 10);
  PlacementEpisode ep(chain({{10, 10}}, {}), net);
  CHECK_FALSE(heu_select(ep, net).server);
  const auto before = net.residuals();
  const auto p = heu_place_full(chain({{10, 10}}, {}), net);
  CHECK_FALSE(p.accepted);
  CHECK(p.trace.size() == 1);
  CHECK(net.residuals() == before);
}

TEST_CASE("full placement on the reference topology") {
  auto net = build_reference_topology(ScaleProfile::Full);
  const auto r = make_request(nsp::testing::volatile_class(), 0, 0, 1);
  const auto p = heu_place_full(r, net);
  CHECK(p.accepted);
  CHECK(p.trace.size() == 5);
  CHECK(p.ledger.total_cpu() == 125.0);

  auto net2 = build_reference_topology(ScaleProfile::Full);
  const auto q = heu_place_full(r, net2);
  REQUIRE(q.trace.size() == p.trace.size());
  for (std::size_t i = 0; i < p.trace.size(); ++i) CHECK(q.trace[i].target == p.trace[i].target);

  auto big = nsp::testing::volatile_class();
  big.req_cpu = 60;
  auto net3 = build_reference_topology(ScaleProfile::Full);
  const auto rej = heu_place_full(make_request(big, 1, 0, 1), net3);
  CHECK_FALSE(rej.accepted);
  CHECK(rej.trace.size() == 1);
}

TEST_CASE("advice is always feasible and matches the brute-force argmax") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    auto inst = oracle::random_tiny(rng);
    auto& net = inst.net;
    PlacementEpisode ep(inst.request, net);
    oracle::Replay ref(net, inst.request);
    while (!ep.finished()) {
      const auto got = heu_select(ep, net);
      const auto want = ref.greedy();
      REQUIRE(got.server.has_value() == want.has_value());
      if (!got.server) break;
      CHECK(*got.server == *want);
      CHECK(ep.feasible(net, *got.server));
      ref.place(*want);
      CHECK(ep.apply_action(net, *got.server).success);
    }
  }
}
