// nspctl: run slice-placement experiments from scenario files.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsp/commands.hpp"
#include "nsp/errors.hpp"

namespace {

void add_overrides(CLI::App* cmd, nsp::RunOverrides& o, bool with_agent) {
  cmd->add_option("--seed", o.seed, "First (or only) seed");
  cmd->add_option("--seeds", o.seed_count, "Number of consecutive seeds to run")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--phase-size", o.phase_size, "Arrivals per TAR phase")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "Simulated time limit")->check(CLI::PositiveNumber);
  cmd->add_option("--arrivals", o.arrivals, "Arrival (episode) limit");
  if (with_agent) {
    cmd->add_option("--variant", o.variant, "drl, edrl, ha-drl or ha-edrl");
    cmd->add_option("--beta", o.beta, "Heuristic shaping exponent")->check(CLI::PositiveNumber);
  }
}

void add_output(CLI::App* cmd, nsp::OutputOptions& o) {
  cmd->add_option("--out", o.directory,
                  std::string("Output directory (relative paths go under $") +
                      nsp::kOutputRootEnv + ")");
  cmd->add_flag("--emit-plot-data", o.emit_plot_data, "Also write plot.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online network slice placement with heuristic-assisted deep RL"};
  app.set_version_flag("--version", nsp::tool_version());
  app.require_subcommand(1);

  nsp::SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Place traffic with the heuristic or a frozen agent");
  simulate->add_option("--scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--policy", sim.policy, "heuristic or agent")
      ->check(CLI::IsMember({"heuristic", "agent"}));
  simulate->add_option("--checkpoint", sim.checkpoint, "Checkpoint for --policy agent");
  simulate->add_option("--events", sim.events, "Replay this event file");
  simulate->add_flag("--sample", sim.sample, "Sample actions instead of taking the argmax");
  add_overrides(simulate, sim.overrides, false);
  add_output(simulate, sim.output);

  nsp::TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an agent, one run per seed");
  train_cmd->add_option("--scenario", train.scenario, "Scenario file")->required();
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every,
                        "Checkpoint and snapshot every N episodes");
  train_cmd->add_option("--budget-seconds", train.budget_seconds, "Wall-clock budget per invocation");
  train_cmd->add_option("--events", train.events, "Train on this event file");
  train_cmd->add_option("--resume", train.resume, "Continue from a snapshot");
  add_overrides(train_cmd, train.overrides, true);
  add_output(train_cmd, train.output);

  nsp::EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Replay a traffic file against a frozen checkpoint");
  evaluate->add_option("--scenario", eval.scenario, "Scenario file")->required();
  evaluate->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--events", eval.events, "Event file (default: the scenario's replay file)");
  evaluate->add_flag("--sample", eval.sample, "Sample actions instead of taking the argmax");
  add_overrides(evaluate, eval.overrides, false);
  add_output(evaluate, eval.output);

  nsp::ExportEventsArgs exp;
  auto* export_cmd = app.add_subcommand("export-events", "Write the generated event stream");
  export_cmd->add_option("--scenario", exp.scenario, "Scenario file")->required();
  export_cmd->add_option("--out", exp.out, "Event file to write")->required();
  add_overrides(export_cmd, exp.overrides, false);

  std::string checkpoint;
  auto* inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint manifest");
  inspect->add_option("checkpoint", checkpoint, "Checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      nsp::cmd_simulate(sim, std::cout);
    } else if (*train_cmd) {
      nsp::cmd_train(train, std::cout);
    } else if (*evaluate) {
      nsp::cmd_evaluate(eval, std::cout);
    } else if (*export_cmd) {
      nsp::cmd_export_events(exp, std::cout);
    } else if (*inspect) {
      nsp::cmd_inspect_checkpoint(checkpoint, std::cout);
    }
  } catch (const nsp::ConfigError& e) {
    std::cerr << "nspctl: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const nsp::CompatibilityError& e) {
    std::cerr << "nspctl: incompatible input: " << e.what() << '\n';
    return 3;
  } catch (const nsp::DivergenceError& e) {
    std::cerr << "nspctl: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "nspctl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
