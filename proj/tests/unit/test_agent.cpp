#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "a2c_oracle.hpp"
#include "nsp/agent.hpp"
#include "nsp/errors.hpp"
#include "nsp/heuristic.hpp"
#include "support.hpp"

using namespace nsp;
using nsp::testing::chain;

namespace {

AgentConfig tiny_config(Variant v, std::uint64_t seed = 1) {
  auto c = AgentConfig::defaults_for(v);
  c.seed = seed;
  c.gcn_width = 2;
  c.nspr_width = 2;
  c.load_width = 3;
  c.forecast_points = 2;
  return c;
}

// Observation with a hand-picked Z: zero all weights, then set the head
// bias to z.
void force_logits(PolicyNetwork& actor, const std::vector<double>& z) {
  for (auto& p : actor.params().items()) p.value.fill(0.0);
  actor.params().at("head.bias").value = Tensor::row(z);
}

}  // namespace

TEST_CASE("variant parsing and defaults") {
  CHECK(parse_variant("HA-DRL") == Variant::HA_DRL);
  CHECK(parse_variant("ha_edrl") == Variant::HA_EDRL);
  CHECK_THROWS_AS(parse_variant("dqn"), ConfigError);
  CHECK(AgentConfig::defaults_for(Variant::DRL).actor_lr == 5e-5);
  CHECK(AgentConfig::defaults_for(Variant::HA_DRL).critic_lr == 1.25e-3);
  CHECK(AgentConfig::defaults_for(Variant::EDRL).actor_lr == 5.7e-5);
  CHECK(AgentConfig::defaults_for(Variant::HA_EDRL).critic_lr == 1.4e-3);

  auto c = AgentConfig::from_json({{"variant", "ha-drl"}, {"beta", 2.0}, {"xi", 1.0}, {"eta", 0.0}});
  CHECK(c.variant == Variant::HA_DRL);
  CHECK(c.beta == 2.0);
  CHECK(c.critic_lr == 1.25e-3);
  const auto round = AgentConfig::from_json(c.to_json());
  CHECK(round.to_json() == c.to_json());

  c.beta = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = AgentConfig::defaults_for(Variant::DRL);
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("heuristic function and shaping") {
  const std::vector<double> z{1.0, 0.5};
  const auto h = heuristic_function(z, 1, 0.1);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == doctest::Approx(0.6).epsilon(1e-15));
  const auto s = heuristic_shaping(z, 1, 1.0, 0.1, 1.0);
  CHECK(z[0] + s[0] == doctest::Approx(1.0));
  CHECK(z[1] + s[1] == doctest::Approx(1.1));

  // Advised action already the argmax with eta = 0: nothing changes.
  const auto none = heuristic_shaping(std::vector<double>{2.0, 0.5, 1.0}, 0, 1.0, 0.0, 2.0);
  for (double v : none) CHECK(v == 0.0);

  // beta = 2 squares the gap.
  const auto sq = heuristic_shaping(std::vector<double>{3.0, 1.0}, 1, 0.5, 0.0, 2.0);
  CHECK(sq[1] == 0.5 * 4.0);
  CHECK_THROWS_AS(heuristic_function(z, 2, 0.0), ContractViolation);
}

TEST_CASE("select_action shaping by variant") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  const auto model = nsp::testing::reference_model();
  auto cfg = tiny_config(Variant::HA_DRL);
  cfg.xi = 1.0;
  cfg.eta = 0.1;
  cfg.beta = 1.0;
  GreedyHeuristic heu;
  Agent agent(cfg, net, &model, &heu);
  force_logits(agent.actor(), {1.0, 0.5, -0.3});
  PlacementEpisode ep(chain({{1, 1}}, {}), net);
  const auto obs = agent.encoder().encode(ep, net);
  std::mt19937_64 rng(1);

  const auto c = select_action(cfg, agent.actor(), obs, std::optional<std::size_t>{1}, rng,
                               ActionMode::Greedy);
  CHECK(c.shaped_z[0] == doctest::Approx(1.0));
  CHECK(c.shaped_z[1] == doctest::Approx(1.1));
  CHECK(c.shaped_z[2] == doctest::Approx(-0.3));
  CHECK(c.action == 1);

  // No feasible server: unshaped.
  const auto u = select_action(cfg, agent.actor(), obs, std::optional<std::size_t>{}, rng);
  CHECK(u.shaped_z == u.z);
  CHECK_THROWS_AS(select_action(cfg, agent.actor(), obs, std::nullopt, rng), ContractViolation);

  auto plain = cfg;
  plain.variant = Variant::DRL;
  const auto p = select_action(plain, agent.actor(), obs, std::optional<std::size_t>{1}, rng);
  CHECK(p.shaped_z == p.z);
}

TEST_CASE("categorical draws follow the softmax") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  auto cfg = tiny_config(Variant::DRL);
  Agent agent(cfg, net, nullptr, nullptr);
  force_logits(agent.actor(), {0.2, -1.0, 1.3});
  PlacementEpisode ep(chain({{1, 1}}, {}), net);
  const auto obs = agent.encoder().encode(ep, net);
  std::mt19937_64 rng(77);
  const int draws = 100000;
  std::vector<double> counts(3, 0.0);
  std::vector<double> policy;
  for (int i = 0; i < draws; ++i) {
    const auto c = select_action(cfg, agent.actor(), obs, std::nullopt, rng);
    CHECK(c.probability > 0.0);
    counts[c.action] += 1;
    policy = c.policy;
  }
  double chi2 = 0;
  for (int k = 0; k < 3; ++k) {
    const double e = policy[k] * draws;
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  // 99th percentile of chi-square with 2 degrees of freedom: -2 ln 0.01.
  CHECK(chi2 < -2.0 * std::log(0.01));
}

TEST_CASE("state encoding") {
  auto net = build_reference_topology(ScaleProfile::Tiny);
  const auto model = nsp::testing::reference_model();
  StateEncoder enc(net, &model, true, 100);
  net.commit({{{0, 10, 60}}, {}});
  PlacementEpisode ep(make_request(nsp::testing::volatile_class(), 0, 5.0, 1.0), net);
  ep.apply_action(net, 1);
  const auto obs = enc.encode(ep, net);
  CHECK(obs.nodes.rows() == net.node_count());
  CHECK(obs.nodes(0, 0) == 40.0 / 50.0);
  CHECK(obs.nodes(0, 1) == 240.0 / 300.0);
  CHECK(obs.nodes(1, 3) == 1.0 / 5.0);
  CHECK(obs.nodes(1, 0) == 25.0 / 50.0);
  // The switch carries all three 10 Gbps links: it has the largest outgoing bandwidth.
  CHECK(obs.nodes(3, 2) == 1.0);
  CHECK(obs.nodes(0, 2) == doctest::Approx(1.0 / 3.0));
  CHECK(obs.nspr[0] == 25.0 / 50.0);
  CHECK(obs.nspr[2] == doctest::Approx(4.0 / 30.0));
  CHECK(obs.nspr[3] == 4.0 / 5.0);
  REQUIRE(obs.load);
  CHECK(obs.load->cols() == 300);
  CHECK((*obs.load)[0] == model.global_load(Resource::Cpu, 5.0));
  CHECK((*obs.load)[100 + 7] == model.global_load(Resource::Ram, 12.0));
  CHECK((*obs.load)[200 + 99] == model.global_load(Resource::Bw, 104.0));
  for (double v : obs.nodes.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("variant wiring") {
  const auto net0 = build_reference_topology(ScaleProfile::Tiny);
  const auto model = nsp::testing::reference_model();
  GreedyHeuristic heu;
  const auto req = chain({{10, 10}, {10, 10}, {10, 10}}, {1, 1});
  for (Variant v : {Variant::DRL, Variant::EDRL, Variant::HA_DRL, Variant::HA_EDRL}) {
    Agent agent(tiny_config(v), net0, &model, &heu);
    auto net = net0;
    const auto trace = agent.run_episode(req, net);
    CHECK(trace.terminal);
    for (const auto& s : trace.steps) CHECK(s.obs.load.has_value() == uses_load(v));
    CHECK(agent.heuristic_queries() == (uses_heuristic(v) ? trace.steps.size() : 0));
  }
  CHECK_THROWS_AS(Agent(tiny_config(Variant::HA_DRL), net0, &model, nullptr), ConfigError);
}

TEST_CASE("episodes on infeasible and roomy substrates") {
  const auto model = nsp::testing::reference_model();
  auto full = nsp::testing::star(2, 5, 5, 10);
  Agent agent(tiny_config(Variant::DRL), full, &model, nullptr);
  const auto fail = agent.run_episode(chain({{10, 10}, {10, 10}}, {1}), full);
  CHECK(fail.steps.size() == 1);
  CHECK(fail.steps[0].reward == -100.0);
  CHECK_FALSE(fail.accepted);

  auto roomy = nsp::testing::star(2, 500, 500, 100);
  Agent a2(tiny_config(Variant::DRL), roomy, &model, nullptr);
  const auto ok = a2.run_episode(chain({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {1, 1, 1}), roomy);
  CHECK(ok.accepted);
  REQUIRE(ok.steps.size() == 4);
  for (int t = 0; t < 3; ++t) CHECK(ok.steps[t].reward == 0.0);
  CHECK(ok.steps[3].reward > 0.0);
  CHECK(ok.steps[3].reward <= 10.0);
  CHECK(ok.ledger.total_cpu() == 4.0);
}

TEST_CASE("discounted returns") {
  const std::vector<double> r{0, 0, 10};
  const auto g = discounted_returns(r, 0.5);
  CHECK(g == std::vector<double>{2.5, 5.0, 10.0});
  CHECK(discounted_returns(std::vector<double>{-100}, 0.99) == std::vector<double>{-100});
}

TEST_CASE("update with zero advantage leaves parameters unchanged") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  Agent agent(tiny_config(Variant::DRL), net, nullptr, nullptr);
  auto n = net;
  auto trace = agent.run_episode(chain({{1, 1}}, {}), n);
  REQUIRE(trace.steps.size() == 1);
  trace.steps[0].reward = agent.critic().evaluate(trace.steps[0].obs)[0];
  const auto actor = agent.actor().params();
  const auto critic = agent.critic().params();
  agent.update(trace);
  CHECK(agent.actor().params() == actor);
  CHECK(agent.critic().params() == critic);
}

TEST_CASE("update direction") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  auto cfg = tiny_config(Variant::DRL);
  cfg.actor_lr = 1e-3;
  cfg.critic_lr = 1e-3;
  Agent agent(cfg, net, nullptr, nullptr);
  auto n = net;
  auto trace = agent.run_episode(chain({{1, 1}}, {}), n);
  const auto& step = trace.steps[0];
  const double v0 = agent.critic().evaluate(step.obs)[0];
  trace.steps[0].reward = v0 + 5.0;  // positive advantage
  const double p0 = softmax(agent.actor().evaluate(step.obs))[step.action];
  agent.update(trace);
  const double p1 = softmax(agent.actor().evaluate(step.obs))[step.action];
  const double v1 = agent.critic().evaluate(step.obs)[0];
  CHECK(p1 > p0);
  CHECK(v1 > v0);
  CHECK(v1 < v0 + 5.0);
}

TEST_CASE("update is deterministic") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  Agent a(tiny_config(Variant::DRL, 4), net, nullptr, nullptr);
  Agent b(tiny_config(Variant::DRL, 4), net, nullptr, nullptr);
  auto n1 = net, n2 = net;
  const auto req = chain({{10, 10}, {10, 10}}, {1});
  const auto ta = a.run_episode(req, n1);
  const auto tb = b.run_episode(req, n2);
  CHECK(ta.steps.size() == tb.steps.size());
  a.update(ta);
  b.update(tb);
  CHECK(a.actor().params() == b.actor().params());
  CHECK(a.critic().params() == b.critic().params());
  CHECK_THROWS_AS(a.update(EpisodeTrace{}), ContractViolation);
}

TEST_CASE("update gradients match finite differences of the losses") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  const auto model = nsp::testing::reference_model();
  GreedyHeuristic heu;
  std::mt19937_64 rng(10);
  int checked = 0;
  for (Variant v : {Variant::DRL, Variant::EDRL, Variant::HA_DRL, Variant::HA_EDRL}) {
    for (int i = 0; i < 3; ++i) {
      auto cfg = tiny_config(v, 100 + i);
      cfg.actor_lr = 0.5;
      cfg.critic_lr = 0.5;
      cfg.eta = 0.05;
      cfg.beta = 2.0;
      Agent agent(cfg, net, &model, &heu);
      oracle::randomize(agent.actor().params(), rng, 0.8);
      oracle::randomize(agent.critic().params(), rng, 0.8);
      auto n = net;
      const auto trace = agent.run_episode(chain({{20, 100}, {20, 100}, {20, 100}}, {4, 4}), n);
      const auto r = oracle::check_update(agent, trace);
      CHECK(r.actor_parameters <= 200);
      CHECK(r.critic_parameters <= 200);
      CHECK(r.actor_error <= 1e-4);
      CHECK(r.critic_error <= 1e-4);
      ++checked;
    }
  }
  CHECK(checked == 12);
}

TEST_CASE("divergence is reported") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  auto cfg = tiny_config(Variant::DRL);
  cfg.critic_lr = 1e300;
  Agent agent(cfg, net, nullptr, nullptr);
  auto n = net;
  auto trace = agent.run_episode(chain({{1, 1}}, {}), n);
  trace.steps[0].reward = 1e10;
  CHECK_THROWS_AS(agent.update(trace), DivergenceError);
}

TEST_CASE("agent state round-trip") {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  Agent a(tiny_config(Variant::DRL, 9), net, nullptr, nullptr);
  auto n = net;
  a.update(a.run_episode(chain({{1, 1}, {1, 1}}, {1}), n));
  const auto state = a.save_state();
  Agent b(tiny_config(Variant::DRL, 1), net, nullptr, nullptr);
  b.load_state(state);
  CHECK(b.actor().params() == a.actor().params());
  auto n1 = net, n2 = net;
  const auto req = chain({{1, 1}, {1, 1}}, {1});
  const auto ta = a.run_episode(req, n1);
  const auto tb = b.run_episode(req, n2);
  REQUIRE(ta.steps.size() == tb.steps.size());
  for (std::size_t i = 0; i < ta.steps.size(); ++i) CHECK(ta.steps[i].action == tb.steps[i].action);

  const auto model = nsp::testing::reference_model();
  Agent c(tiny_config(Variant::EDRL, 9), net, &model, nullptr);
  CHECK_THROWS_AS(c.load_state(state), CompatibilityError);
}
