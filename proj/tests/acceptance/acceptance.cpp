// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if
// any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "a2c_oracle.hpp"
#include "gradcheck.hpp"
#include "nsp/commands.hpp"
#include "nsp/errors.hpp"
#include "nsp/heuristic.hpp"
#include "nsp/networks.hpp"
#include "nsp/placement.hpp"
#include "nsp/scenario.hpp"
#include "nsp/simulator.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsp;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kLoadTol = 1e-12;
constexpr double kGradTol = 1e-4;
constexpr double kEquivarianceTol = 1e-12;
constexpr double kGarGap = 0.10;
constexpr double kSettleBand = 0.05;

const fs::path kScenarios = fs::path(NSP_SOURCE_DIR) / "scenarios";

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail << "[" << why << "] ";
    pass = pass && ok;
  }
};

int failures = 0;

void report(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << "exception: " << e.what();
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " -- "
            << v.detail.str() << std::endl;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t count_arrivals(const std::vector<TrafficEvent>& events) {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto& e) {
    return e.kind == EventKind::Arrival;
  }));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 1 ------------------------------------------------------------------------

void load_model(Verdict& v) {
  const auto m = nsp::testing::reference_model();
  const double lt = m.class_load(nsp::testing::long_term_class(), Resource::Cpu, 0.0);
  const double vol = m.class_load(nsp::testing::volatile_class(), Resource::Cpu, 48.0);
  v.require(std::abs(lt - 2500.0 / 6300.0) <= kLoadTol, "long-term load");
  v.require(std::abs(vol - 1.5 * 2500.0 / 6300.0) <= kLoadTol, "volatile load at t=48");

  double lo = 1e9, hi = -1e9, drift = 0.0;
  for (int i = 0; i <= 96 * 64; ++i) {
    const double t = i / 64.0;
    const double g = m.global_load(Resource::Cpu, t);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
    drift = std::max(drift, std::abs(m.global_load(Resource::Cpu, t + 96.0) - g));
  }
  v.require(std::abs(lo - 2500.0 / 6300.0) <= kLoadTol, "global minimum");
  v.require(std::abs(hi - 6250.0 / 6300.0) <= kLoadTol, "global maximum");
  v.require(drift <= kLoadTol, "period 96");
  v.detail << "long-term " << fmt(lt) << ", volatile@48 " << fmt(vol) << ", global in [" << fmt(lo)
           << ", " << fmt(hi) << "], period drift " << fmt(drift);
}

// 2 ------------------------------------------------------------------------

void arrivals(Verdict& v) {
  const int seeds = 100;
  const LoadModel dyn({nsp::testing::volatile_class()}, {6300, 37800, 1e6});
  const LoadModel stat({nsp::testing::long_term_class()}, {6300, 37800, 1e6});
  double d = 0.0, s = 0.0;
  for (int k = 0; k < seeds; ++k) {
    d += static_cast<double>(count_arrivals(generate_events(dyn, 96.0, 1000 + k)));
    s += static_cast<double>(count_arrivals(generate_events(stat, 1e5, 2000 + k)));
  }
  d /= seeds;
  s /= seeds;
  const double dtol = 3.0 * std::sqrt(72.0) / std::sqrt(100.0);
  const double stol = 3.0 * std::sqrt(2000.0) / std::sqrt(100.0);
  v.require(std::abs(d - 72.0) <= dtol, "dynamic mean");
  v.require(std::abs(s - 2000.0) <= stol, "static mean");
  v.detail << "dynamic mean " << fmt(d) << " (72 +- " << fmt(dtol) << "), static mean " << fmt(s)
           << " (2000 +- " << fmt(stol) << ")";
}

// 3 ------------------------------------------------------------------------

void rewards(Verdict& v) {
  auto net = nsp::testing::star(1, 125, 750, 10);
  const VnfDemand vnf{25, 150};
  PlacementEpisode ep(nsp::testing::chain({vnf, vnf, vnf, vnf, vnf}, {2, 2, 2, 2}), net);
  for (int i = 0; i < 5; ++i) v.require(ep.apply_action(net, 0).success, "placement step");
  const auto ok = episode_reward(ep.outcomes(), 5);
  v.require(ok.unscaled_terminal == 1000.0, "unscaled 1000");
  v.require(ok.rewards == std::vector<double>{0, 0, 0, 0, 10.0}, "scaled 10");

  // Failures at every possible step of a 5-VNF chain: room for k VNFs only.
  bool all_minus_100 = true;
  for (int room = 0; room < 5; ++room) {
    auto small = nsp::testing::star(1, 125, 750, 10);
    small.commit({{{0, 25.0 * (5 - room), 0.0}}, {}});
    PlacementEpisode f(nsp::testing::chain({vnf, vnf, vnf, vnf, vnf}, {2, 2, 2, 2}), small);
    while (!f.finished()) f.apply_action(small, 0);
    const auto r = episode_reward(f.outcomes(), 5);
    all_minus_100 = all_minus_100 && r.rewards.size() == static_cast<std::size_t>(room + 1) &&
                    r.rewards.back() == -100.0;
    for (int i = 0; i < room; ++i) all_minus_100 = all_minus_100 && r.rewards[i] == 0.0;
  }
  v.require(all_minus_100, "failure -100");
  v.detail << "unscaled " << fmt(ok.unscaled_terminal) << ", scaled terminal "
           << fmt(ok.rewards.back()) << ", failed step reward -100 at steps 1..5: "
           << (all_minus_100 ? "yes" : "no");
}

// 4 ------------------------------------------------------------------------

void shaping(Verdict& v) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> logit(-5.0, 5.0), pos(1e-3, 2.0);
  std::uniform_int_distribution<std::size_t> width(2, 40);
  std::size_t argmax_ok = 0, support_ok = 0;
  const int n = 10000;
  const std::vector<double> betas{0.5, 1.0, 2.0, 3.0};
  for (int i = 0; i < n; ++i) {
    std::vector<double> z(width(rng));
    for (double& x : z) x = logit(rng);
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, z.size() - 1)(rng);
    const double eta = pos(rng), xi = pos(rng);

    const auto s = heuristic_shaping(z, a, 1.0, eta, 1.0);
    bool strict = true;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k != a && !(z[a] + s[a] > z[k] + s[k])) strict = false;
    }
    argmax_ok += strict;

    const auto h = heuristic_function(z, a, eta);
    bool support = h[a] >= eta;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k != a) support = support && h[k] == 0.0;
    }
    for (double beta : betas) {
      const auto sb = heuristic_shaping(z, a, xi, eta, beta);
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (k != a) support = support && sb[k] == 0.0;
      }
    }
    support_ok += support;
  }
  v.require(argmax_ok == static_cast<std::size_t>(n), "strict argmax");
  v.require(support_ok == static_cast<std::size_t>(n), "H support");
  v.detail << "strict argmax " << argmax_ok << "/" << n << ", H zero off a* and >= eta on it "
           << support_ok << "/" << n;
}

// 5 ------------------------------------------------------------------------

void gradients(Verdict& v) {
  const auto net = build_reference_topology(ScaleProfile::Tiny);
  const auto model = nsp::testing::reference_model();
  GreedyHeuristic heu;
  std::mt19937_64 rng(5);
  int instances = 0;
  double worst = 0.0;
  std::size_t largest = 0;
  for (Variant variant : {Variant::DRL, Variant::EDRL, Variant::HA_DRL, Variant::HA_EDRL}) {
    for (int i = 0; i < 6; ++i) {
      auto cfg = AgentConfig::defaults_for(variant);
      cfg.seed = 500 + i;
      cfg.gcn_width = 2;
      cfg.nspr_width = 2;
      cfg.load_width = 3;
      cfg.forecast_points = 2;
      cfg.actor_lr = 0.5;
      cfg.critic_lr = 0.5;
      cfg.eta = 0.05;
      cfg.beta = 1.0 + i % 3;
      Agent agent(cfg, net, &model, &heu);
      oracle::randomize(agent.actor().params(), rng, 0.8);
      oracle::randomize(agent.critic().params(), rng, 0.8);
      const double d = 10.0 + 5.0 * (i % 3);
      auto scratch = net;
      const auto trace = agent.run_episode(
          nsp::testing::chain({{d, 60}, {d, 60}, {d, 60}}, {2, 3}), scratch);
      const auto r = oracle::check_update(agent, trace);
      worst = std::max({worst, r.actor_error, r.critic_error});
      largest = std::max({largest, r.actor_parameters, r.critic_parameters});
      ++instances;
    }
  }
  v.require(instances >= 20, "instance count");
  v.require(largest <= 200, "parameter count");
  v.require(worst <= kGradTol, "relative error");
  v.detail << instances << " instances, <= " << largest << " parameters per network, max relative error "
           << fmt(worst) << " (tol " << fmt(kGradTol) << ")";
}

// 6 ------------------------------------------------------------------------

void equivariance(Verdict& v) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int graphs = 0;
  for (; graphs < 50; ++graphs) {
    const std::size_t n = 2 + rng() % 19;
    const auto adj = oracle::random_adjacency(n, 0.25, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor x(n, 4);
    for (double& e : x.values()) e = u(rng);
    for (Activation act : {Activation::Tanh, Activation::Relu}) {
      GcnEncoder base(normalized_adjacency(adj), 3, 5, act);
      GcnEncoder moved(normalized_adjacency(oracle::permute_both(adj, perm)), 3, 5, act);
      ParameterSet ps;
      base.init_parameters(ps, 4, rng);
      oracle::randomize(ps, rng);
      const auto expect = oracle::permute_rows(base.forward(ps, x), perm);
      const auto got = moved.forward(ps, oracle::permute_rows(x, perm));
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - expect[i]));
    }
  }
  v.require(worst <= kEquivarianceTol, "equivariance");
  v.detail << graphs << " graphs (2..20 nodes, tanh and relu), max deviation " << fmt(worst);
}

// 7 ------------------------------------------------------------------------

void brute_force(Verdict& v) {
  std::mt19937_64 rng(7);
  std::size_t sequences = 0, probes = 0, advice = 0, mismatches = 0;
  for (int i = 0; i < 1500; ++i) {
    const auto inst = oracle::random_tiny(rng);
    // Every host sequence: feasibility, deltas and rollback.
    for (const auto& hosts : oracle::all_assignments(inst.net, inst.request.size())) {
      auto net = inst.net;
      PlacementEpisode ep(inst.request, net);
      oracle::Replay ref(inst.net, inst.request);
      for (NodeId h : hosts) {
        for (NodeId s = 0; s < net.node_count(); ++s) {
          if (net.node(s).kind != NodeKind::Server) continue;
          mismatches += ep.feasible(net, s).has_value() != ref.probe(s).ok;
          ++probes;
        }
        const auto expect = ref.place(h);
        const auto got = ep.apply_action(net, h);
        if (got.success != expect.ok) {
          ++mismatches;
          break;
        }
        if (!got.success) break;
        mismatches += got.delta_b != expect.balance || got.delta_c != expect.consumption;
      }
      if (!ep.complete()) mismatches += net.residuals() != inst.net.residuals();
      ++sequences;
    }
    // The heuristic's choice is the exhaustive score argmax at every step.
    auto net = inst.net;
    PlacementEpisode ep(inst.request, net);
    oracle::Replay ref(inst.net, inst.request);
    while (!ep.finished()) {
      const auto got = heu_select(ep, net);
      const auto want = ref.greedy();
      ++advice;
      if (got.server.has_value() != want.has_value() || (got.server && *got.server != *want)) {
        ++mismatches;
        break;
      }
      if (!got.server) break;
      ref.place(*want);
      ep.apply_action(net, *got.server);
    }
  }
  v.require(mismatches == 0, "mismatch");
  v.detail << sequences << " host sequences, " << probes << " feasibility probes, " << advice
           << " heuristic decisions, " << mismatches << " mismatches";
}

// 8 ------------------------------------------------------------------------

struct Curve {
  std::vector<double> gar;               // per seed
  std::vector<std::vector<double>> tar;  // per seed, per phase
};

Curve train_desk(const Scenario& base, const std::string& variant, std::string& error) {
  auto s = base;
  RunOverrides o;
  o.variant = variant;
  apply_overrides(s, o);
  const auto model = s.load_model();
  GreedyHeuristic heu;
  Curve c;
  for (auto seed : s.seeds) {
    auto cfg = s.agent;
    cfg.seed = seed;
    Agent agent(cfg, s.network, model.get(), &heu);
    AgentPolicy policy(agent, true);
    Simulator sim(s.network, model, seed, s.generator_options(), s.phase_size);
    try {
      sim.run(policy, {s.horizon, s.arrivals});
    } catch (const DivergenceError& e) {
      error += variant + " seed " + std::to_string(seed) + " diverged; ";
      continue;
    }
    c.gar.push_back(gar(sim.records()));
    std::vector<double> phases;
    for (const auto& p : tar_phases(sim.records(), s.phase_size)) {
      if (p.ratio) phases.push_back(*p.ratio);
    }
    c.tar.push_back(phases);
  }
  return c;
}

/// 1-based count of phases until the median TAR curve first comes within
/// the band of its final value.
std::size_t phases_to_settle(const std::vector<double>& curve) {
  for (std::size_t p = 0; p < curve.size(); ++p) {
    if (std::abs(curve[p] - curve.back()) <= kSettleBand) return p + 1;
  }
  return curve.size();
}

std::vector<double> median_curve(const Curve& c) {
  std::vector<double> out;
  for (std::size_t p = 0; !c.tar.empty() && p < c.tar.front().size(); ++p) {
    std::vector<double> at;
    for (const auto& seed : c.tar) at.push_back(seed.at(p));
    out.push_back(median(at));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

void convergence(Verdict& v) {
  const auto s = load_scenario((kScenarios / "desk.scenario").string());
  v.require(s.network.servers().size() == 8, "desk topology");
  std::string error;
  const auto ha = train_desk(s, "ha-drl", error);
  const auto drl = train_desk(s, "drl", error);
  v.require(error.empty(), error);
  v.require(ha.gar.size() == 3 && drl.gar.size() == 3, "three seeds per variant");
  if (!v.pass) return;

  const double gap = median(ha.gar) - median(drl.gar);
  const auto ha_curve = median_curve(ha), drl_curve = median_curve(drl);
  const auto ha_settle = phases_to_settle(ha_curve), drl_settle = phases_to_settle(drl_curve);
  v.require(gap >= kGarGap, "GAR gap");
  v.require(ha_settle <= 2, "HA-DRL settles within 2 phases");
  v.require(drl_settle > 2, "DRL needs more than 2 phases");
  v.detail << "median GAR HA-DRL " << fmt(median(ha.gar)) << " vs DRL " << fmt(median(drl.gar))
           << " (gap " << fmt(gap) << ", need >= " << fmt(kGarGap) << "); median TAR HA-DRL ["
           << join(ha_curve) << "] settles in " << ha_settle << " phase(s); DRL ["
           << join(drl_curve) << "] settles in " << drl_settle << " phase(s)";
}

// 9 ------------------------------------------------------------------------

void determinism(Verdict& v) {
  const auto root = fs::temp_directory_path() / ("nsp-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  ::setenv(kOutputRootEnv, root.c_str(), 1);
  std::ostringstream log;
  const auto scenario = (kScenarios / "desk.scenario").string();

  bool identical = true;
  for (const std::string variant : {"ha-drl", "drl"}) {
    TrainArgs t;
    t.scenario = scenario;
    t.overrides.variant = variant;
    t.overrides.seed = 11;
    t.overrides.arrivals = 300;
    t.output.directory = "a";
    const auto a = cmd_train(t, log);
    t.output.directory = "b";
    const auto b = cmd_train(t, log);
    for (const auto* f : {"metrics.csv", "phases.csv"}) {
      const auto x = slurp(a.at(0).directory / f), y = slurp(b.at(0).directory / f);
      identical = identical && !x.empty() && x == y;
    }
  }
  v.require(identical, "bit-identical CSVs");

  ExportEventsArgs e;
  e.scenario = scenario;
  e.overrides.seed = 12;
  e.overrides.arrivals = 300;
  e.out = "events.jsonl";
  cmd_export_events(e, log);
  std::ifstream in(root / "events.jsonl");
  const auto events = read_events(in);
  std::vector<std::tuple<std::uint64_t, double, int>> exported;
  for (const auto& ev : events) {
    if (ev.kind == EventKind::Arrival) exported.emplace_back(ev.uid, ev.time, ev.class_id);
  }

  std::vector<std::vector<std::tuple<std::uint64_t, double, int>>> fed;
  for (const std::string variant : {"ha-drl", "drl"}) {
    TrainArgs t;
    t.scenario = scenario;
    t.overrides.variant = variant;
    t.overrides.seed = 13;
    t.events = (root / "events.jsonl").string();
    t.output.directory = "replay";
    std::vector<std::tuple<std::uint64_t, double, int>> seq;
    const auto runs = cmd_train(t, log);
    for (const auto& r : runs.at(0).records) seq.emplace_back(r.uid, r.time, r.class_id);
    fed.push_back(seq);
  }
  for (std::size_t i = 0; i < std::min(fed[0].size(), exported.size()); ++i) {
    if (fed[0][i] != exported[i] || fed[1][i] != exported[i]) {
      v.detail << "first difference at arrival " << i << ": exported uid " << std::get<0>(exported[i])
               << " t " << fmt(std::get<1>(exported[i])) << ", fed uid " << std::get<0>(fed[0][i])
               << "/" << std::get<0>(fed[1][i]) << "; ";
      break;
    }
  }
  v.require(!exported.empty() && fed[0] == fed[1] && fed[0] == exported, "replayed traffic");
  v.detail << "repeat runs bit-identical: " << (identical ? "yes" : "no") << "; " << exported.size()
           << "/" << fed[0].size() << "/" << fed[1].size()
           << " exported arrivals fed identically to ha-drl and drl: "
           << (fed[0] == fed[1] && fed[0] == exported ? "yes" : "no");
  ::unsetenv(kOutputRootEnv);
  fs::remove_all(root);
}

}  // namespace

int main() {
  report(1, "load model", load_model);
  report(2, "arrival calibration", arrivals);
  report(3, "reward composition", rewards);
  report(4, "heuristic shaping", shaping);
  report(5, "gradient correctness", gradients);
  report(6, "GCN permutation equivariance", equivariance);
  report(7, "brute-force oracle equivalence", brute_force);
  report(8, "desk-scale convergence ordering", convergence);
  report(9, "determinism and replay", determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
