#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsp/heuristic.hpp"
#include "nsp/networks.hpp"
#include "nsp/placement.hpp"
#include "nsp/traffic.hpp"

namespace nsp {

enum class Variant { DRL, EDRL, HA_DRL, HA_EDRL };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);
inline bool uses_load(Variant v) { return v == Variant::EDRL || v == Variant::HA_EDRL; }
inline bool uses_heuristic(Variant v) {
  return v == Variant::HA_DRL || v == Variant::HA_EDRL;
}

struct AgentConfig {
  Variant variant = Variant::DRL;
  double actor_lr = 5e-5;
  double critic_lr = 1.25e-3;
  double gamma = 0.99;
  double xi = 1.0;
  double eta = 0.0;
  double beta = 1.0;
  std::uint64_t seed = 1;
  ActionSet actions = ActionSet::Servers;

  std::size_t gcn_layers = 3;
  std::size_t gcn_width = 60;
  std::size_t nspr_width = 4;
  std::size_t load_width = 100;
  std::size_t forecast_points = 100;

  /// Learning rates used for the variant when none are given explicitly.
  static AgentConfig defaults_for(Variant v);
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep the variant's defaults.
  static AgentConfig from_json(const nlohmann::json& j);
};

/// Builds normalized observations. Resource features are divided by the
/// largest per-node maximum of that resource; chi and m_v by |V|.
class StateEncoder {
 public:
  StateEncoder(const SubstrateNetwork& net, const LoadModel* model,
               bool use_load, std::size_t forecast_points = 100);

  Observation encode(const PlacementEpisode& episode,
                     const SubstrateNetwork& net) const;
  /// 3 x forecast_points values: cpu, ram, then bw forecast from t_a.
  Tensor load_state(double t_a) const;

 private:
  double scale_cpu_;
  double scale_ram_;
  double scale_bw_;
  const LoadModel* model_;
  bool use_load_;
  std::size_t points_;
};

/// H(sigma, .): zero except at the advised action, where it is
/// max(z) - z[advised] + eta.
std::vector<double> heuristic_function(std::span<const double> z,
                                       std::size_t advised, double eta);
/// xi * H^beta per action, the additive term applied to Z.
std::vector<double> heuristic_shaping(std::span<const double> z,
                                      std::size_t advised, double xi,
                                      double eta, double beta);

enum class ActionMode { Sample, Greedy };

struct ActionChoice {
  std::size_t action = 0;
  double probability = 0.0;
  std::vector<double> z;
  std::vector<double> shaping;  // all zeros when unshaped
  std::vector<double> shaped_z;
  std::vector<double> policy;
};

/// advice must be provided (possibly empty) for heuristic variants; it is
/// ignored otherwise. advised_action maps advice to an action index.
ActionChoice select_action(const AgentConfig& config, PolicyNetwork& actor,
                           const Observation& obs,
                           std::optional<std::optional<std::size_t>> advised_action,
                           std::mt19937_64& rng,
                           ActionMode mode = ActionMode::Sample);

struct StepRecord {
  Observation obs;
  std::size_t action = 0;
  double probability = 0.0;
  std::vector<double> shaping;
  double value = 0.0;
  double reward = 0.0;
  bool success = false;
  std::optional<NodeId> advised;
};

struct EpisodeTrace {
  std::uint64_t uid = 0;
  std::vector<StepRecord> steps;
  std::vector<PlacementOutcome> outcomes;
  bool terminal = false;
  bool accepted = false;
  double unscaled_reward = 0.0;
  ResourceDelta ledger;  // what an accepted request holds
};

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_advantage = 0.0;
};

/// Discounted returns R_t = sum_k gamma^(k-t) r_{k+1}.
std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double gamma);

/// Actor-critic learner for one substrate. Single threaded.
class Agent {
 public:
  Agent(AgentConfig config, const SubstrateNetwork& net, const LoadModel* model,
        const PlacementHeuristic* heuristic);

  const AgentConfig& config() const { return config_; }
  PolicyNetwork& actor() { return actor_; }
  PolicyNetwork& critic() { return critic_; }
  const PolicyNetwork& actor() const { return actor_; }
  const PolicyNetwork& critic() const { return critic_; }
  const StateEncoder& encoder() const { return encoder_; }
  std::size_t heuristic_queries() const { return heuristic_queries_; }
  std::size_t updates() const { return updates_; }

  std::size_t action_count() const;
  NodeId action_target(std::size_t action) const;
  std::optional<std::size_t> action_of(NodeId node) const;

  /// Places the request step by step until success or the first failure.
  EpisodeTrace run_episode(const SliceRequest& request, SubstrateNetwork& net,
                           ActionMode mode = ActionMode::Sample);
  /// One A2C step over a finished trace. Throws DivergenceError if any
  /// parameter becomes non-finite.
  UpdateStats update(const EpisodeTrace& trace);

  nlohmann::json save_state() const;
  void load_state(const nlohmann::json& state);

 private:
  AgentConfig config_;
  std::vector<NodeId> targets_;
  StateEncoder encoder_;
  PolicyNetwork actor_;
  PolicyNetwork critic_;
  const PlacementHeuristic* heuristic_;
  std::mt19937_64 rng_;
  std::size_t heuristic_queries_ = 0;
  std::size_t updates_ = 0;
};

NetworkShape network_shape(const AgentConfig& config, const SubstrateNetwork& net);

}  // namespace nsp
