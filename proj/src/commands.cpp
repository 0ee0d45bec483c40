#include "nsp/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>

#include "nsp/checkpoint.hpp"
#include "nsp/errors.hpp"
#include "nsp/heuristic.hpp"
#include "nsp/simulator.hpp"

#ifndef NSP_VERSION
#define NSP_VERSION "0.0.0"
#endif

namespace nsp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string tool_version() { return NSP_VERSION; }

void apply_overrides(Scenario& s, const RunOverrides& o) {
  if (o.variant) {
    const Variant v = parse_variant(*o.variant);
    if (v != s.agent.variant) {
      // Switching variant brings that variant's learning rates along.
      const auto defaults = AgentConfig::defaults_for(v);
      const auto base = AgentConfig::defaults_for(s.agent.variant);
      if (s.agent.actor_lr == base.actor_lr) s.agent.actor_lr = defaults.actor_lr;
      if (s.agent.critic_lr == base.critic_lr) s.agent.critic_lr = defaults.critic_lr;
      s.agent.variant = v;
    }
  }
  if (o.beta) s.agent.beta = *o.beta;
  if (o.phase_size) s.phase_size = *o.phase_size;
  if (o.horizon) s.horizon = *o.horizon;
  if (o.arrivals) s.arrivals = *o.arrivals;
  if (o.seed || o.seed_count) {
    const std::uint64_t first = o.seed ? *o.seed : s.seeds.front();
    const std::size_t count = o.seed_count ? *o.seed_count : 1;
    s.seeds.clear();
    for (std::size_t i = 0; i < count; ++i) s.seeds.push_back(first + i);
  }
  s.validate();
}

fs::path resolve_output(const Scenario& s, const OutputOptions& o) {
  fs::path dir = o.directory.empty() ? fs::path(s.output_dir) : fs::path(o.directory);
  if (dir.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) dir = fs::path(root) / dir;
  }
  return dir;
}

namespace {

struct Prepared {
  Scenario scenario;
  std::shared_ptr<const LoadModel> model;
  std::optional<std::vector<SliceRequest>> replay;
  std::optional<std::string> events_path;
};

Prepared prepare(const std::string& scenario_path, const RunOverrides& overrides,
                 const std::optional<std::string>& events) {
  Prepared p{load_scenario(scenario_path), nullptr, std::nullopt, std::nullopt};
  apply_overrides(p.scenario, overrides);
  if (events) {
    p.scenario.replay_events = *events;
    p.scenario.validate();
  }
  p.model = p.scenario.load_model();
  if (p.scenario.replay_events) {
    p.events_path = p.scenario.replay_events;
    std::ifstream in(*p.events_path);
    if (!in) throw ConfigError("cannot open event file " + *p.events_path);
    p.replay = requests_from_events(*p.model, read_events(in));
  }
  return p;
}

std::unique_ptr<Simulator> make_simulator(const Prepared& p, std::uint64_t seed) {
  if (p.replay) {
    return std::make_unique<Simulator>(p.scenario.network, *p.replay, p.scenario.phase_size);
  }
  return std::make_unique<Simulator>(p.scenario.network, p.model, seed,
                                     p.scenario.generator_options(), p.scenario.phase_size);
}

RunLimits limits_of(const Scenario& s) {
  RunLimits l;
  l.horizon = s.horizon;
  if (s.arrivals > 0) l.max_arrivals = s.arrivals;
  return l;
}

json base_manifest(const Prepared& p, const std::string& command, std::uint64_t seed) {
  json traffic = {{"kind", p.replay ? "replay" : "generated"}};
  if (p.events_path) traffic["events"] = fs::absolute(*p.events_path).string();
  return {{"tool", "nspctl"},
          {"version", tool_version()},
          {"command", command},
          {"scenario_hash", scenario_hash(p.scenario)},
          {"scenario", scenario_to_json(p.scenario)},
          {"seed", seed},
          {"traffic", traffic},
          {"checkpoints", json::array()}};
}

void write_outputs(RunResult& run, const Scenario& s, const OutputOptions& o) {
  fs::create_directories(run.directory);
  {
    std::ofstream out(run.directory / "metrics.csv");
    write_records_csv(out, run.records);
  }
  {
    std::ofstream out(run.directory / "phases.csv");
    write_phases_csv(out, tar_phases(run.records, s.phase_size));
  }
  json outputs = {{"metrics", "metrics.csv"}, {"phases", "phases.csv"}};
  if (o.emit_plot_data) {
    std::ofstream out(run.directory / "plot.json");
    out << plot_series(run.records, s.phase_size).dump() << '\n';
    outputs["plot"] = "plot.json";
  }
  run.manifest["outputs"] = outputs;
  run.manifest["end_episode"] = run.records.size();
  if (!run.records.empty()) run.manifest["gar"] = gar(run.records);
  std::ofstream out(run.directory / "manifest.json");
  out << run.manifest.dump(2) << '\n';
}

json checkpoint_metadata(const Agent& agent, const Scenario& s, std::size_t episodes) {
  return {{"agent", agent.config().to_json()},
          {"topology_fingerprint", s.network.fingerprint()},
          {"episodes", episodes},
          {"scenario_hash", scenario_hash(s)}};
}

/// Agent with parameters from a checkpoint, after checking that the
/// checkpoint fits this scenario's substrate.
std::unique_ptr<Agent> frozen_agent(const std::string& path, const Scenario& s,
                                    const LoadModel& model,
                                    const PlacementHeuristic& heuristic,
                                    std::uint64_t seed) {
  const auto data = load_checkpoint(path);
  const auto& meta = data.manifest.at("metadata");
  if (!meta.contains("agent")) {
    throw CompatibilityError("checkpoint " + path + " carries no agent configuration");
  }
  auto cfg = AgentConfig::from_json(meta.at("agent"));
  // The seed drives action sampling only; the weights come from the file.
  cfg.seed = seed;
  const auto expected = network_shape(cfg, s.network);
  if (data.shape.actions != expected.actions || data.shape.nodes != expected.nodes) {
    throw CompatibilityError(
        "checkpoint action space has " + std::to_string(data.shape.actions) +
        " actions over " + std::to_string(data.shape.nodes) + " nodes; the scenario topology needs " +
        std::to_string(expected.actions) + " over " + std::to_string(expected.nodes));
  }
  if (!(data.shape == expected)) {
    throw CompatibilityError("checkpoint layer sizes do not match the agent configuration");
  }
  if (meta.contains("topology_fingerprint") &&
      meta.at("topology_fingerprint").get<std::uint64_t>() != s.network.fingerprint()) {
    throw CompatibilityError("checkpoint was trained on a different topology");
  }
  auto agent = std::make_unique<Agent>(cfg, s.network, &model, &heuristic);
  restore_parameters(agent->actor().params(), data.actor);
  restore_parameters(agent->critic().params(), data.critic);
  return agent;
}

std::vector<RunResult> run_frozen(const Prepared& p, const std::string& checkpoint,
                                  const OutputOptions& output, bool sample,
                                  const std::string& command, std::ostream& log) {
  GreedyHeuristic heuristic;
  const auto root = resolve_output(p.scenario, output);
  std::vector<RunResult> runs;
  for (const auto seed : p.scenario.seeds) {
    auto agent = frozen_agent(checkpoint, p.scenario, *p.model, heuristic, seed);
    const auto& cfg = agent->config();
    AgentPolicy policy(*agent, false, sample ? ActionMode::Sample : ActionMode::Greedy);
    auto sim = make_simulator(p, seed);
    sim->run(policy, limits_of(p.scenario));

    RunResult run;
    run.seed = seed;
    run.directory = root / (command + "-" + to_string(cfg.variant)) / ("seed-" + std::to_string(seed));
    run.records = sim->records();
    run.manifest = base_manifest(p, command, seed);
    run.manifest["policy"] = policy.name();
    run.manifest["start_episode"] = 0;
    run.manifest["checkpoints"].push_back(fs::absolute(checkpoint).string());
    write_outputs(run, p.scenario, output);
    log << command << " seed " << seed << ": " << run.records.size() << " arrivals, gar "
        << (run.records.empty() ? std::string("n/a") : format_double(gar(run.records)))
        << " -> " << run.directory.string() << '\n';
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace

std::vector<RunResult> cmd_simulate(const SimulateArgs& args, std::ostream& log) {
  const auto p = prepare(args.scenario, args.overrides, args.events);
  if (args.policy == "agent") {
    if (!args.checkpoint) throw ConfigError("--policy agent needs --checkpoint");
    return run_frozen(p, *args.checkpoint, args.output, args.sample, "simulate", log);
  }
  if (args.policy != "heuristic") {
    throw ConfigError("--policy: expected heuristic or agent, got '" + args.policy + "'");
  }
  GreedyHeuristic heuristic;
  const auto root = resolve_output(p.scenario, args.output);
  std::vector<RunResult> runs;
  for (const auto seed : p.scenario.seeds) {
    HeuristicPolicy policy(heuristic);
    auto sim = make_simulator(p, seed);
    sim->run(policy, limits_of(p.scenario));
    RunResult run;
    run.seed = seed;
    run.directory = root / "simulate-heuristic" / ("seed-" + std::to_string(seed));
    run.records = sim->records();
    run.manifest = base_manifest(p, "simulate", seed);
    run.manifest["policy"] = policy.name();
    run.manifest["start_episode"] = 0;
    write_outputs(run, p.scenario, args.output);
    log << "simulate seed " << seed << ": " << run.records.size() << " arrivals, gar "
        << (run.records.empty() ? std::string("n/a") : format_double(gar(run.records)))
        << " -> " << run.directory.string() << '\n';
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<RunResult> cmd_train(const TrainArgs& args, std::ostream& log) {
  const auto p = prepare(args.scenario, args.overrides, args.events);
  if (args.resume && p.scenario.seeds.size() != 1) {
    throw ConfigError("--resume continues a single seed");
  }
  GreedyHeuristic heuristic;
  const auto root = resolve_output(p.scenario, args.output);
  const auto started = std::chrono::steady_clock::now();
  std::vector<RunResult> runs;
  for (const auto seed : p.scenario.seeds) {
    AgentConfig cfg = p.scenario.agent;
    cfg.seed = seed;
    Agent agent(cfg, p.scenario.network, p.model.get(), &heuristic);
    AgentPolicy policy(agent, true);
    auto sim = make_simulator(p, seed);

    RunResult run;
    run.seed = seed;
    run.directory = root / ("train-" + to_string(cfg.variant)) / ("seed-" + std::to_string(seed));
    run.manifest = base_manifest(p, "train", seed);
    run.manifest["policy"] = policy.name();
    if (args.resume) {
      std::ifstream in(*args.resume);
      if (!in) throw ConfigError("cannot open snapshot " + *args.resume);
      sim->restore(json::parse(in), policy);
    }
    run.manifest["start_episode"] = sim->arrivals();
    fs::create_directories(run.directory / "checkpoints");

    auto save = [&](const std::string& stem) {
      const auto path = run.directory / "checkpoints" / (stem + ".ckpt");
      save_checkpoint(path.string(), agent.actor(), agent.critic(),
                      checkpoint_metadata(agent, p.scenario, sim->arrivals()));
      run.manifest["checkpoints"].push_back(fs::relative(path, run.directory).string());
    };
    const auto hook = [&](const AcceptanceRecord& r, Simulator& s) {
      if (args.checkpoint_every > 0 && r.arrival_index % args.checkpoint_every == 0) {
        const auto stem = "episode-" + std::to_string(r.arrival_index);
        save(stem);
        std::ofstream snap(run.directory / "checkpoints" / (stem + ".snapshot.json"));
        snap << s.snapshot(policy).dump() << '\n';
      }
      if (args.budget_seconds) {
        const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - started;
        if (spent.count() >= *args.budget_seconds) s.request_stop();
      }
    };
    sim->run(policy, limits_of(p.scenario), hook);
    save("final");
    run.records = sim->records();
    write_outputs(run, p.scenario, args.output);
    log << "train " << to_string(cfg.variant) << " seed " << seed << ": "
        << run.records.size() << " episodes, gar "
        << (run.records.empty() ? std::string("n/a") : format_double(gar(run.records)))
        << " -> " << run.directory.string() << '\n';
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<RunResult> cmd_evaluate(const EvaluateArgs& args, std::ostream& log) {
  const auto p = prepare(args.scenario, args.overrides, args.events);
  if (!p.replay) {
    throw ConfigError("evaluate replays a traffic file: pass --events or set traffic.replay");
  }
  return run_frozen(p, args.checkpoint, args.output, args.sample, "evaluate", log);
}

std::size_t cmd_export_events(const ExportEventsArgs& args, std::ostream& log) {
  auto s = load_scenario(args.scenario);
  apply_overrides(s, args.overrides);
  const auto model = s.load_model();
  const auto events = generate_events(
      *model, s.horizon, s.seeds.front(), s.generator_options(),
      s.arrivals > 0 ? s.arrivals : std::numeric_limits<std::size_t>::max());
  fs::path out = args.out;
  if (out.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) out = fs::path(root) / out;
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream file(out);
  if (!file) throw ConfigError("cannot write " + out.string());
  write_events(file, events);
  const std::size_t arrivals = events.size() / 2;
  log << "exported " << arrivals << " arrivals (seed " << s.seeds.front() << ") to "
      << out.string() << '\n';
  return arrivals;
}

void cmd_inspect_checkpoint(const std::string& path, std::ostream& out) {
  const auto data = load_checkpoint(path);
  json summary = data.manifest;
  summary["parameters"] = {{"actor", data.actor.scalar_count()},
                           {"critic", data.critic.scalar_count()}};
  out << summary.dump(2) << '\n';
}

}  // namespace nsp
