#include "nsp/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::DRL: return "drl";
    case Variant::EDRL: return "edrl";
    case Variant::HA_DRL: return "ha-drl";
    case Variant::HA_EDRL: return "ha-edrl";
  }
  return "unknown";
}

Variant parse_variant(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "drl") return Variant::DRL;
  if (t == "edrl") return Variant::EDRL;
  if (t == "ha-drl" || t == "ha_drl") return Variant::HA_DRL;
  if (t == "ha-edrl" || t == "ha_edrl") return Variant::HA_EDRL;
  throw ConfigError("unknown variant '" + text +
                    "' (expected drl, edrl, ha-drl or ha-edrl)");
}

AgentConfig AgentConfig::defaults_for(Variant v) {
  AgentConfig c;
  c.variant = v;
  if (uses_load(v)) {
    c.actor_lr = 5.7e-5;
    c.critic_lr = 1.4e-3;
  } else {
    c.actor_lr = 5e-5;
    c.critic_lr = 1.25e-3;
  }
  return c;
}

void AgentConfig::validate() const {
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ConfigError("agent: learning rates must be > 0");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("agent: gamma must be in (0, 1]");
  if (uses_heuristic(variant) && !(beta > 0.0)) {
    throw ConfigError("agent: beta must be > 0 for heuristic-assisted variants");
  }
  if (gcn_layers == 0 || gcn_width == 0 || nspr_width == 0 || load_width == 0 ||
      forecast_points == 0) {
    throw ConfigError("agent: layer sizes must be positive");
  }
}

nlohmann::json AgentConfig::to_json() const {
  return {{"variant", to_string(variant)},
          {"actor_lr", actor_lr},
          {"critic_lr", critic_lr},
          {"gamma", gamma},
          {"xi", xi},
          {"eta", eta},
          {"beta", beta},
          {"seed", seed},
          {"action_set", actions == ActionSet::Servers ? "servers" : "all-nodes"},
          {"architecture",
           {{"gcn_layers", gcn_layers},
            {"gcn_width", gcn_width},
            {"nspr_width", nspr_width},
            {"load_width", load_width},
            {"forecast_points", forecast_points}}}};
}

AgentConfig AgentConfig::from_json(const nlohmann::json& j) {
  const Variant v = parse_variant(j.value("variant", std::string("drl")));
  AgentConfig c = defaults_for(v);
  c.actor_lr = j.value("actor_lr", c.actor_lr);
  c.critic_lr = j.value("critic_lr", c.critic_lr);
  c.gamma = j.value("gamma", c.gamma);
  c.xi = j.value("xi", c.xi);
  c.eta = j.value("eta", c.eta);
  c.beta = j.value("beta", c.beta);
  c.seed = j.value("seed", c.seed);
  const auto actions = j.value("action_set", std::string("servers"));
  if (actions == "servers") {
    c.actions = ActionSet::Servers;
  } else if (actions == "all-nodes") {
    c.actions = ActionSet::AllNodes;
  } else {
    throw ConfigError("agent.action_set: expected servers or all-nodes");
  }
  if (j.contains("architecture")) {
    const auto& a = j.at("architecture");
    c.gcn_layers = a.value("gcn_layers", c.gcn_layers);
    c.gcn_width = a.value("gcn_width", c.gcn_width);
    c.nspr_width = a.value("nspr_width", c.nspr_width);
    c.load_width = a.value("load_width", c.load_width);
    c.forecast_points = a.value("forecast_points", c.forecast_points);
  }
  return c;
}

StateEncoder::StateEncoder(const SubstrateNetwork& net, const LoadModel* model,
                           bool use_load, std::size_t forecast_points)
    : scale_cpu_(net.max_server_cpu()),
      scale_ram_(net.max_server_ram()),
      scale_bw_(net.max_node_outgoing_bw()),
      model_(model),
      use_load_(use_load),
      points_(forecast_points) {
  if (use_load_ && !model_) {
    throw ContractViolation("load state requested without a load model");
  }
}

Observation StateEncoder::encode(const PlacementEpisode& episode,
                                 const SubstrateNetwork& net) const {
  Observation obs;
  const auto& req = episode.request();
  const double chain = static_cast<double>(req.size());
  obs.nodes = Tensor(net.node_count(), 4);
  for (NodeId n = 0; n < net.node_count(); ++n) {
    const auto& node = net.node(n);
    obs.nodes(n, 0) = node.cap_cpu / scale_cpu_;
    obs.nodes(n, 1) = node.cap_ram / scale_ram_;
    obs.nodes(n, 2) = net.node_outgoing_bw(n) / scale_bw_;
    obs.nodes(n, 3) = static_cast<double>(episode.chi()[n]) / chain;
  }
  const std::size_t v = std::min(episode.next_vnf(), req.size() - 1);
  obs.nspr = Tensor::row({req.vnfs[v].cpu / scale_cpu_, req.vnfs[v].ram / scale_ram_,
                          req.incident_bw(v) / scale_bw_,
                          static_cast<double>(episode.remaining()) / chain});
  if (use_load_) obs.load = load_state(req.arrival_time);
  return obs;
}

Tensor StateEncoder::load_state(double t_a) const {
  std::vector<double> values;
  values.reserve(3 * points_);
  for (Resource j : kResources) {
    const auto f = model_->load_forecast(j, t_a, points_);
    values.insert(values.end(), f.begin(), f.end());
  }
  return Tensor::row(std::move(values));
}

std::vector<double> heuristic_function(std::span<const double> z,
                                       std::size_t advised, double eta) {
  if (advised >= z.size()) throw ContractViolation("advised action out of range");
  std::vector<double> h(z.size(), 0.0);
  const double best = *std::max_element(z.begin(), z.end());
  h[advised] = best - z[advised] + eta;
  return h;
}

std::vector<double> heuristic_shaping(std::span<const double> z,
                                      std::size_t advised, double xi,
                                      double eta, double beta) {
  auto h = heuristic_function(z, advised, eta);
  for (double& v : h) v = v == 0.0 ? 0.0 : xi * std::pow(v, beta);
  return h;
}

ActionChoice select_action(const AgentConfig& config, PolicyNetwork& actor,
                           const Observation& obs,
                           std::optional<std::optional<std::size_t>> advised_action,
                           std::mt19937_64& rng, ActionMode mode) {
  ActionChoice c;
  c.z = actor.evaluate(obs);
  c.shaping.assign(c.z.size(), 0.0);
  if (uses_heuristic(config.variant)) {
    if (!advised_action) {
      throw ContractViolation("heuristic-assisted variant needs heuristic advice");
    }
    if (*advised_action) {
      c.shaping = heuristic_shaping(c.z, **advised_action, config.xi, config.eta,
                                    config.beta);
    }
  }
  c.shaped_z = c.z;
  for (std::size_t i = 0; i < c.z.size(); ++i) c.shaped_z[i] += c.shaping[i];
  c.policy = softmax(c.shaped_z);

  if (mode == ActionMode::Greedy) {
    c.action = static_cast<std::size_t>(
        std::max_element(c.policy.begin(), c.policy.end()) - c.policy.begin());
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cumulative = 0.0;
    c.action = c.policy.size() - 1;
    for (std::size_t i = 0; i < c.policy.size(); ++i) {
      cumulative += c.policy[i];
      if (u < cumulative) {
        c.action = i;
        break;
      }
    }
    // Round-off can leave u past the last cumulative; skip zero-mass tails.
    while (c.action > 0 && c.policy[c.action] == 0.0) --c.action;
  }
  c.probability = c.policy[c.action];
  return c;
}

std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

NetworkShape network_shape(const AgentConfig& config, const SubstrateNetwork& net) {
  NetworkShape s;
  s.nodes = net.node_count();
  s.actions = config.actions == ActionSet::Servers ? net.servers().size()
                                                   : net.node_count();
  s.gcn_layers = config.gcn_layers;
  s.gcn_width = config.gcn_width;
  s.nspr_width = config.nspr_width;
  s.use_load = uses_load(config.variant);
  s.load_inputs = 3 * config.forecast_points;
  s.load_width = config.load_width;
  return s;
}

namespace {

std::mt19937_64 agent_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 3U};
  return std::mt19937_64(seq);
}

nlohmann::json params_to_json(const ParameterSet& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : params.items()) out[p.name] = p.value.raw();
  return out;
}

void params_from_json(ParameterSet& params, const nlohmann::json& j) {
  for (auto& p : params.items()) {
    const auto values = j.at(p.name).get<std::vector<double>>();
    if (values.size() != p.value.size()) {
      throw CompatibilityError("agent state parameter " + p.name + " has the wrong size");
    }
    p.value = Tensor(p.value.rows(), p.value.cols(), values);
  }
}

}  // namespace

Agent::Agent(AgentConfig config, const SubstrateNetwork& net,
             const LoadModel* model, const PlacementHeuristic* heuristic)
    : config_((config.validate(), config)),
      targets_(config.actions == ActionSet::Servers ? net.servers()
                                                    : std::vector<NodeId>{}),
      encoder_(net, model, uses_load(config.variant), config.forecast_points),
      actor_(NetworkRole::Actor, network_shape(config, net),
             normalized_adjacency(net), config.seed),
      critic_(NetworkRole::Critic, network_shape(config, net),
              normalized_adjacency(net), config.seed),
      heuristic_(heuristic),
      rng_(agent_rng(config.seed)) {
  if (config_.actions == ActionSet::AllNodes) {
    for (NodeId n = 0; n < net.node_count(); ++n) targets_.push_back(n);
  }
  if (uses_heuristic(config_.variant) && !heuristic_) {
    throw ConfigError("heuristic-assisted variant needs a heuristic");
  }
}

std::size_t Agent::action_count() const { return targets_.size(); }

NodeId Agent::action_target(std::size_t action) const {
  if (action >= targets_.size()) throw LookupError("action index out of range");
  return targets_[action];
}

std::optional<std::size_t> Agent::action_of(NodeId node) const {
  const auto it = std::lower_bound(targets_.begin(), targets_.end(), node);
  if (it == targets_.end() || *it != node) return std::nullopt;
  return static_cast<std::size_t>(it - targets_.begin());
}

EpisodeTrace Agent::run_episode(const SliceRequest& request, SubstrateNetwork& net,
                                ActionMode mode) {
  PlacementEpisode episode(request, net, config_.actions);
  EpisodeTrace trace;
  trace.uid = request.uid;
  const bool assisted = uses_heuristic(config_.variant);
  while (!episode.finished()) {
    StepRecord step;
    step.obs = encoder_.encode(episode, net);
    std::optional<std::optional<std::size_t>> advised;
    if (assisted) {
      const auto advice = heuristic_->advise(episode, net);
      ++heuristic_queries_;
      step.advised = advice.server;
      advised = advice.server ? action_of(*advice.server) : std::nullopt;
    }
    const auto choice = select_action(config_, actor_, step.obs, advised, rng_, mode);
    step.action = choice.action;
    step.probability = choice.probability;
    step.shaping = choice.shaping;
    step.value = critic_.evaluate(step.obs)[0];
    const auto outcome = episode.apply_action(net, targets_[choice.action]);
    step.success = outcome.success;
    trace.steps.push_back(std::move(step));
  }
  trace.outcomes = episode.outcomes();
  const auto rewards = episode_reward(trace.outcomes, request.size());
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    trace.steps[t].reward = rewards.rewards[t];
  }
  trace.unscaled_reward = rewards.unscaled_terminal;
  trace.terminal = true;
  trace.accepted = episode.complete();
  if (trace.accepted) trace.ledger = episode.ledger();
  return trace;
}

UpdateStats Agent::update(const EpisodeTrace& trace) {
  if (!trace.terminal || trace.steps.empty()) {
    throw ContractViolation("update needs a complete episode trace");
  }
  std::vector<double> rewards;
  for (const auto& s : trace.steps) rewards.push_back(s.reward);
  const auto returns = discounted_returns(rewards, config_.gamma);

  UpdateStats stats;

  // Critic first, on the pre-update parameters used to act.
  Graph critic_graph;
  std::vector<Graph::Var> critic_terms;
  std::vector<double> advantages;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto value = critic_.forward(critic_graph, trace.steps[t].obs);
    advantages.push_back(returns[t] - critic_graph.value(value)[0]);
    const auto diff = critic_graph.add(critic_graph.constant(Tensor(1, 1, returns[t])),
                                       critic_graph.scale(value, -1.0));
    critic_terms.push_back(critic_graph.square(diff));
  }
  const auto critic_loss = critic_graph.sum(critic_terms);
  stats.critic_loss = critic_graph.value(critic_loss)[0];

  Graph actor_graph;
  std::vector<Graph::Var> actor_terms;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& s = trace.steps[t];
    const auto z = actor_.forward(actor_graph, s.obs);
    const auto shaped = actor_graph.add(z, actor_graph.constant(Tensor::row(s.shaping)));
    const auto log_p = actor_graph.pick(actor_graph.log_softmax(shaped), s.action);
    actor_terms.push_back(actor_graph.scale(log_p, -advantages[t]));
  }
  const auto actor_loss = actor_graph.sum(actor_terms);
  stats.actor_loss = actor_graph.value(actor_loss)[0];

  critic_.params().zero_grad();
  critic_graph.backward(critic_loss);
  actor_.params().zero_grad();
  actor_graph.backward(actor_loss);
  critic_.params().sgd_step(config_.critic_lr);
  actor_.params().sgd_step(config_.actor_lr);
  if (!critic_.params().all_finite() || !actor_.params().all_finite()) {
    std::ostringstream msg;
    msg << "training diverged at update " << updates_ + 1
        << " (critic loss " << stats.critic_loss << "); lower critic_lr ("
        << config_.critic_lr << ") or actor_lr (" << config_.actor_lr << ")";
    throw DivergenceError(msg.str());
  }

  double sum = 0.0;
  for (double a : advantages) sum += a;
  stats.mean_advantage = sum / static_cast<double>(advantages.size());
  ++updates_;
  return stats;
}

nlohmann::json Agent::save_state() const {
  std::ostringstream rng;
  rng << rng_;
  return {{"config", config_.to_json()},
          {"actor", params_to_json(actor_.params())},
          {"critic", params_to_json(critic_.params())},
          {"rng", rng.str()},
          {"heuristic_queries", heuristic_queries_},
          {"updates", updates_}};
}

void Agent::load_state(const nlohmann::json& state) {
  const auto cfg = AgentConfig::from_json(state.at("config"));
  if (cfg.variant != config_.variant || cfg.actions != config_.actions) {
    throw CompatibilityError("agent state was saved for a different variant");
  }
  params_from_json(actor_.params(), state.at("actor"));
  params_from_json(critic_.params(), state.at("critic"));
  std::istringstream rng(state.at("rng").get<std::string>());
  rng >> rng_;
  heuristic_queries_ = state.at("heuristic_queries").get<std::size_t>();
  updates_ = state.at("updates").get<std::size_t>();
}

}  // namespace nsp
