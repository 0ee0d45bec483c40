#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsp/agent.hpp"
#include "nsp/metrics.hpp"
#include "nsp/substrate.hpp"
#include "nsp/traffic.hpp"

namespace nsp {

/// An experiment definition. Scenario files are JSON documents with the
/// sections topology, classes, traffic, simulation, agent and output;
/// see scenarios/ for examples.
struct Scenario {
  std::string name = "scenario";
  nlohmann::json topology;  // as written: a profile with overrides, or explicit
  SubstrateNetwork network;
  std::vector<SliceClass> classes;  // as written
  double rate_scale = 1.0;          // multiplies every class's arrival rate
  LifetimeDistribution lifetime = LifetimeDistribution::Exponential;
  std::optional<std::string> replay_events;  // traffic file instead of generation

  std::size_t arrivals = 10000;
  double horizon = std::numeric_limits<double>::infinity();
  std::size_t phase_size = kDefaultPhaseSize;
  std::vector<std::uint64_t> seeds{1};

  AgentConfig agent;
  std::string output_dir = "runs";

  ResourceTotals capacity() const;
  std::vector<SliceClass> scaled_classes() const;
  std::shared_ptr<const LoadModel> load_model() const;
  GeneratorOptions generator_options() const;

  /// Re-checks classes, load bounds and simulation settings.
  void validate() const;
};

/// Parses and validates a scenario document. Errors are ConfigError
/// messages prefixed with the offending field path. Relative file
/// references resolve against base_dir.
Scenario parse_scenario(const nlohmann::json& doc, const std::string& base_dir = ".");
/// Also accepts a run manifest, whose "scenario" member is used.
Scenario load_scenario(const std::string& path);

/// A document that parse_scenario turns back into the same scenario.
nlohmann::json scenario_to_json(const Scenario& s);

/// FNV-1a over every result-affecting field (output paths excluded), as
/// 16 hex digits.
std::string scenario_hash(const Scenario& s);

std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t seed = 14695981039346656037ULL);

}  // namespace nsp
