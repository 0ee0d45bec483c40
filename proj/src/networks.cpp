#include "nsp/networks.hpp"

#include <cmath>

#include "nsp/errors.hpp"

namespace nsp {

const char* to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation parse_activation(const std::string& text) {
  if (text == "tanh") return Activation::Tanh;
  if (text == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + text + "'");
}

nlohmann::json NetworkShape::to_json() const {
  return {{"nodes", nodes},
          {"actions", actions},
          {"node_features", node_features},
          {"gcn_layers", gcn_layers},
          {"gcn_width", gcn_width},
          {"nspr_features", nspr_features},
          {"nspr_width", nspr_width},
          {"use_load", use_load},
          {"load_inputs", load_inputs},
          {"load_width", load_width}};
}

NetworkShape NetworkShape::from_json(const nlohmann::json& j) {
  NetworkShape s;
  s.nodes = j.at("nodes").get<std::size_t>();
  s.actions = j.at("actions").get<std::size_t>();
  s.node_features = j.at("node_features").get<std::size_t>();
  s.gcn_layers = j.at("gcn_layers").get<std::size_t>();
  s.gcn_width = j.at("gcn_width").get<std::size_t>();
  s.nspr_features = j.at("nspr_features").get<std::size_t>();
  s.nspr_width = j.at("nspr_width").get<std::size_t>();
  s.use_load = j.at("use_load").get<bool>();
  s.load_inputs = j.at("load_inputs").get<std::size_t>();
  s.load_width = j.at("load_width").get<std::size_t>();
  return s;
}

Tensor normalized_adjacency(const Tensor& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ContractViolation("adjacency must be square");
  Tensor a = adjacency;
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(degree);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  return a;
}

Tensor normalized_adjacency(const SubstrateNetwork& net) {
  Tensor adj(net.node_count(), net.node_count());
  for (const auto& l : net.links()) {
    adj(l.a, l.b) = 1.0;
    adj(l.b, l.a) = 1.0;
  }
  return normalized_adjacency(adj);
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w(fan_in, fan_out);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

namespace {

Graph::Var activate(Graph& g, Graph::Var x, Activation a) {
  return a == Activation::Tanh ? g.tanh(x) : g.relu(x);
}

Graph::Var dense(Graph& g, ParameterSet& params, const std::string& prefix,
                 Graph::Var x) {
  const auto w = g.parameter(params.at(prefix + ".weight"));
  const auto b = g.parameter(params.at(prefix + ".bias"));
  return g.add_bias(g.matmul(x, w), b);
}

void add_dense(ParameterSet& params, const std::string& prefix,
               std::size_t in, std::size_t out, std::mt19937_64& rng) {
  params.add(prefix + ".weight", glorot_uniform(in, out, rng));
  params.add(prefix + ".bias", Tensor(1, out));
}

}  // namespace

GcnEncoder::GcnEncoder(Tensor propagation, std::size_t layers,
                       std::size_t width, Activation activation)
    : propagation_(std::move(propagation)),
      layers_(layers),
      width_(width),
      activation_(activation) {
  if (propagation_.rows() != propagation_.cols()) {
    throw ContractViolation("propagation matrix must be square");
  }
  if (layers_ == 0 || width_ == 0) {
    throw ContractViolation("GCN needs at least one layer of nonzero width");
  }
}

void GcnEncoder::init_parameters(ParameterSet& params,
                                 std::size_t input_features,
                                 std::mt19937_64& rng) const {
  std::size_t in = input_features;
  for (std::size_t l = 0; l < layers_; ++l) {
    add_dense(params, "gcn." + std::to_string(l), in, width_, rng);
    in = width_;
  }
}

Graph::Var GcnEncoder::forward(Graph& g, ParameterSet& params,
                               Graph::Var features) const {
  if (g.value(features).rows() != propagation_.rows()) {
    throw ContractViolation("node feature rows do not match the graph size");
  }
  const auto a_hat = g.constant(propagation_);
  Graph::Var x = features;
  for (std::size_t l = 0; l < layers_; ++l) {
    x = activate(g, dense(g, params, "gcn." + std::to_string(l), g.matmul(a_hat, x)),
                 activation_);
  }
  return x;
}

Tensor GcnEncoder::forward(ParameterSet& params, const Tensor& features) const {
  Graph g;
  return g.value(forward(g, params, g.constant(features)));
}

PolicyNetwork::PolicyNetwork(NetworkRole role, NetworkShape shape,
                             Tensor propagation, std::uint64_t seed)
    : role_(role),
      shape_(shape),
      encoder_(std::move(propagation), shape.gcn_layers, shape.gcn_width,
               role == NetworkRole::Actor ? Activation::Tanh : Activation::Relu) {
  if (shape_.nodes != encoder_.propagation().rows()) {
    throw ContractViolation("network shape does not match the graph size");
  }
  if (shape_.actions == 0) throw ContractViolation("network needs at least one action");
  init(seed);
}

void PolicyNetwork::init(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    role_ == NetworkRole::Actor ? 1U : 2U};
  std::mt19937_64 rng(seq);
  encoder_.init_parameters(params_, shape_.node_features, rng);
  add_dense(params_, "nspr", shape_.nspr_features, shape_.nspr_width, rng);
  if (shape_.use_load) {
    add_dense(params_, "load", shape_.load_inputs, shape_.load_width, rng);
  }
  add_dense(params_, "head", shape_.combined_width(), shape_.actions, rng);
  if (role_ == NetworkRole::Critic) add_dense(params_, "value", shape_.actions, 1, rng);
}

void PolicyNetwork::check(const Observation& obs) const {
  if (obs.nodes.rows() != shape_.nodes || obs.nodes.cols() != shape_.node_features) {
    throw ContractViolation("PSN state has the wrong dimensions");
  }
  if (obs.nspr.rows() != 1 || obs.nspr.cols() != shape_.nspr_features) {
    throw ContractViolation("NSPR state has the wrong dimensions");
  }
  if (shape_.use_load) {
    if (!obs.load || obs.load->rows() != 1 || obs.load->cols() != shape_.load_inputs) {
      throw ContractViolation("load state missing or of the wrong width");
    }
  }
}

Graph::Var PolicyNetwork::forward(Graph& g, const Observation& obs) {
  check(obs);
  const Activation act = activation();
  std::vector<Graph::Var> parts;
  parts.push_back(g.flatten(encoder_.forward(g, params_, g.constant(obs.nodes))));
  parts.push_back(activate(g, dense(g, params_, "nspr", g.constant(obs.nspr)), act));
  if (shape_.use_load) {
    parts.push_back(activate(g, dense(g, params_, "load", g.constant(*obs.load)), act));
  }
  const auto combined = g.concat(parts);
  const auto head = dense(g, params_, "head", combined);
  if (role_ == NetworkRole::Actor) return head;
  return dense(g, params_, "value", g.relu(head));
}

std::vector<double> PolicyNetwork::evaluate(const Observation& obs) {
  Graph g;
  const auto out = forward(g, obs);
  const auto v = g.value(out).values();
  return {v.begin(), v.end()};
}

}  // namespace nsp
