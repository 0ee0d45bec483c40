#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsp/autodiff.hpp"
#include "nsp/substrate.hpp"
#include "nsp/tensor.hpp"

namespace nsp {

enum class Activation { Tanh, Relu };

const char* to_string(Activation a);
Activation parse_activation(const std::string& text);

/// Layer sizes shared by actor and critic.
struct NetworkShape {
  std::size_t nodes = 0;    // |N|
  std::size_t actions = 0;  // |S| (or |N| with the all-nodes action set)
  std::size_t node_features = 4;
  std::size_t gcn_layers = 3;   // K
  std::size_t gcn_width = 60;   // F
  std::size_t nspr_features = 4;
  std::size_t nspr_width = 4;
  bool use_load = false;
  std::size_t load_inputs = 300;  // 100 forecast points x {cpu, ram, bw}
  std::size_t load_width = 100;

  std::size_t combined_width() const {
    return nodes * gcn_width + nspr_width + (use_load ? load_width : 0);
  }
  nlohmann::json to_json() const;
  static NetworkShape from_json(const nlohmann::json& j);
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// One decision state: per-node PSN features, NSPR features, and the
/// optional load forecast. All values are normalized to [0, 1].
struct Observation {
  Tensor nodes;  // |N| x node_features
  Tensor nspr;   // 1 x nspr_features
  std::optional<Tensor> load;  // 1 x load_inputs
};

/// D^-1/2 (A + I) D^-1/2 for an adjacency matrix given as a dense 0/1
/// tensor.
Tensor normalized_adjacency(const Tensor& adjacency);
Tensor normalized_adjacency(const SubstrateNetwork& net);

/// K graph-convolution layers X <- act(A_hat X W_l + b_l).
class GcnEncoder {
 public:
  GcnEncoder(Tensor propagation, std::size_t layers, std::size_t width,
             Activation activation);

  const Tensor& propagation() const { return propagation_; }
  std::size_t layers() const { return layers_; }
  std::size_t width() const { return width_; }

  /// Adds gcn.{l}.weight / gcn.{l}.bias for every layer.
  void init_parameters(ParameterSet& params, std::size_t input_features,
                       std::mt19937_64& rng) const;
  Graph::Var forward(Graph& g, ParameterSet& params, Graph::Var features) const;
  Tensor forward(ParameterSet& params, const Tensor& features) const;

 private:
  Tensor propagation_;
  std::size_t layers_;
  std::size_t width_;
  Activation activation_;
};

enum class NetworkRole { Actor, Critic };

/// Actor: GCN | NSPR FC | load FC -> combined -> FC with one Z per action.
/// Critic: same trunk with ReLU, an FC with |actions| units, and a single
/// value neuron.
class PolicyNetwork {
 public:
  PolicyNetwork(NetworkRole role, NetworkShape shape, Tensor propagation,
                std::uint64_t seed);

  NetworkRole role() const { return role_; }
  const NetworkShape& shape() const { return shape_; }
  Activation activation() const {
    return role_ == NetworkRole::Actor ? Activation::Tanh : Activation::Relu;
  }
  const GcnEncoder& encoder() const { return encoder_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Actor: 1 x actions Z values. Critic: 1 x 1 state value.
  Graph::Var forward(Graph& g, const Observation& obs);
  std::vector<double> evaluate(const Observation& obs);

 private:
  void check(const Observation& obs) const;
  void init(std::uint64_t seed);

  NetworkRole role_;
  NetworkShape shape_;
  GcnEncoder encoder_;
  ParameterSet params_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng);

}  // namespace nsp
