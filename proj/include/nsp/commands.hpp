#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsp/metrics.hpp"
#include "nsp/scenario.hpp"

namespace nsp {

/// Environment variable naming the directory relative outputs go under.
inline constexpr const char* kOutputRootEnv = "NSP_OUTPUT_ROOT";

std::string tool_version();

/// Command-line values that take precedence over the scenario file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seed_count;  // seeds seed, seed + 1, ...
  std::optional<std::string> variant;
  std::optional<double> beta;
  std::optional<std::size_t> phase_size;
  std::optional<double> horizon;
  std::optional<std::size_t> arrivals;
};

void apply_overrides(Scenario& s, const RunOverrides& o);

struct OutputOptions {
  std::string directory;  // empty: the scenario's output directory
  bool emit_plot_data = false;
};

std::filesystem::path resolve_output(const Scenario& s, const OutputOptions& o);

struct SimulateArgs {
  std::string scenario;
  RunOverrides overrides;
  OutputOptions output;
  std::string policy = "heuristic";  // heuristic | agent
  std::optional<std::string> checkpoint;  // required for the agent policy
  std::optional<std::string> events;      // replay file
  bool sample = false;  // frozen agent samples instead of acting greedily
};

struct TrainArgs {
  std::string scenario;
  RunOverrides overrides;
  OutputOptions output;
  std::size_t checkpoint_every = 0;  // arrivals; 0 = final checkpoint only
  std::optional<double> budget_seconds;
  std::optional<std::string> events;
  /// Continue from an episode-N.snapshot.json written next to a checkpoint.
  std::optional<std::string> resume;
};

struct EvaluateArgs {
  std::string scenario;
  RunOverrides overrides;
  OutputOptions output;
  std::string checkpoint;
  std::optional<std::string> events;
  bool sample = false;
};

struct ExportEventsArgs {
  std::string scenario;
  RunOverrides overrides;
  std::string out;
};

/// Everything one run produced; also what gets written to disk.
struct RunResult {
  std::uint64_t seed = 0;
  std::filesystem::path directory;
  std::vector<AcceptanceRecord> records;
  nlohmann::json manifest;
};

/// Each command writes metrics.csv, phases.csv and manifest.json (plus
/// plot.json on request) per seed and returns the runs. Errors surface as
/// exceptions from errors.hpp.
std::vector<RunResult> cmd_simulate(const SimulateArgs& args, std::ostream& log);
std::vector<RunResult> cmd_train(const TrainArgs& args, std::ostream& log);
std::vector<RunResult> cmd_evaluate(const EvaluateArgs& args, std::ostream& log);
/// Writes the event stream of the first seed; returns the arrival count.
std::size_t cmd_export_events(const ExportEventsArgs& args, std::ostream& log);
/// The checkpoint manifest, pretty-printed.
void cmd_inspect_checkpoint(const std::string& path, std::ostream& out);

}  // namespace nsp
