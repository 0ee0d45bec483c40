#include "nsp/placement.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "nsp/errors.hpp"

namespace nsp {

std::optional<Route> route(const SubstrateNetwork& net, NodeId src, NodeId dst,
                           double bw) {
  net.node(src);
  net.node(dst);
  if (src == dst) return Route{{src}, {}};

  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(net.node_count(), kUnreached);
  std::deque<NodeId> queue{dst};
  dist[dst] = 0;
  while (!queue.empty() && dist[src] == kUnreached) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (const auto& nb : net.neighbors(u)) {
      if (dist[nb.node] != kUnreached || net.link(nb.link).cap_bw < bw) continue;
      dist[nb.node] = dist[u] + 1;
      queue.push_back(nb.node);
    }
  }
  if (dist[src] == kUnreached) return std::nullopt;

  // Walking downhill from src through the smallest-id neighbor at each hop
  // gives the lexicographically smallest shortest path.
  Route r;
  r.nodes.push_back(src);
  NodeId u = src;
  while (u != dst) {
    for (const auto& nb : net.neighbors(u)) {
      if (dist[nb.node] + 1 == dist[u] && net.link(nb.link).cap_bw >= bw) {
        r.links.push_back(nb.link);
        r.nodes.push_back(nb.node);
        u = nb.node;
        break;
      }
    }
  }
  return r;
}

PlacementEpisode::PlacementEpisode(SliceRequest request,
                                   const SubstrateNetwork& net, ActionSet actions)
    : request_(std::move(request)),
      actions_(actions),
      chi_(net.node_count(), 0),
      own_cpu_(net.node_count(), 0.0),
      own_ram_(net.node_count(), 0.0) {
  if (request_.vnfs.empty()) throw ContractViolation("request has no VNFs");
  if (request_.vls.size() + 1 != request_.vnfs.size()) {
    throw ContractViolation("request must have |vnfs| - 1 virtual links");
  }
}

std::optional<Route> PlacementEpisode::feasible(const SubstrateNetwork& net,
                                                NodeId target) const {
  if (finished()) return std::nullopt;
  const auto& node = net.node(target);
  if (!node.is_server()) return std::nullopt;
  const auto& vnf = request_.vnfs[next_];
  if (node.cap_cpu < vnf.cpu || node.cap_ram < vnf.ram) return std::nullopt;
  if (next_ == 0) return Route{{target}, {}};
  return route(net, hosts_.back(), target, request_.vls[next_ - 1]);
}

double PlacementEpisode::load_balance(const SubstrateNetwork& net,
                                      NodeId target) const {
  const auto& node = net.node(target);
  if (!node.is_server()) return 0.0;
  return (node.cap_cpu + own_cpu_[target]) / node.max_cpu +
         (node.cap_ram + own_ram_[target]) / node.max_ram;
}

double PlacementEpisode::consumption(const Route& path) {
  return path.hops() > 0 ? 1.0 / static_cast<double>(path.hops()) : 1.0;
}

PlacementOutcome PlacementEpisode::apply_action(SubstrateNetwork& net,
                                                NodeId target) {
  if (finished()) throw ContractViolation("episode already finished");
  const auto& node = net.node(target);
  if (!node.is_server() && actions_ == ActionSet::Servers) {
    throw ContractViolation("placement target " + std::to_string(target) +
                            " is not a server");
  }

  PlacementOutcome out;
  out.vnf = next_;
  out.target = target;

  auto path = feasible(net, target);
  if (!path) {
    out.success = false;
    out.terminal = true;
    out.delta_a = kRejectReward;
    rollback(net);
    failed_ = true;
    outcomes_.push_back(out);
    return out;
  }

  const auto& vnf = request_.vnfs[next_];
  ResourceDelta step;
  step.nodes.push_back({target, vnf.cpu, vnf.ram});
  if (next_ > 0) {
    for (LinkId l : path->links) step.links.push_back({l, request_.vls[next_ - 1]});
  }

  out.delta_b = load_balance(net, target);
  out.delta_c = consumption(*path);
  net.commit(step);

  ledger_.append(step);
  own_cpu_[target] += vnf.cpu;
  own_ram_[target] += vnf.ram;
  ++chi_[target];
  hosts_.push_back(target);
  ++next_;

  out.success = true;
  out.terminal = complete();
  out.delta_a = kAcceptReward;
  out.path = std::move(*path);
  outcomes_.push_back(out);
  return out;
}

void PlacementEpisode::rollback(SubstrateNetwork& net) {
  if (ledger_.empty()) return;
  net.release(ledger_);
  ledger_ = {};
  std::fill(own_cpu_.begin(), own_cpu_.end(), 0.0);
  std::fill(own_ram_.begin(), own_ram_.end(), 0.0);
}

EpisodeRewards episode_reward(const std::vector<PlacementOutcome>& outcomes,
                              std::size_t episode_length) {
  if (outcomes.empty()) throw ContractViolation("empty outcome sequence");
  if (episode_length == 0) throw ContractViolation("episode length must be > 0");
  EpisodeRewards r;
  r.rewards.assign(outcomes.size(), 0.0);
  double sum = 0.0;
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    const auto& o = outcomes[t];
    if (!o.success) {
      if (t + 1 != outcomes.size()) {
        throw ContractViolation("outcomes continue after a failed step");
      }
      r.rewards[t] = o.delta_a;
      return r;
    }
    sum += o.product();
  }
  if (outcomes.size() == episode_length) {
    r.unscaled_terminal = sum;
    r.rewards.back() =
        sum / (kRewardNormalizer * static_cast<double>(episode_length));
  }
  return r;
}

nlohmann::json trace_record(std::uint64_t uid, std::size_t step,
                            const PlacementOutcome& o) {
  return {{"uid", uid},
          {"step", step},
          {"vnf", o.vnf},
          {"target", o.target},
          {"path", o.path.nodes},
          {"delta_a", o.delta_a},
          {"delta_b", o.delta_b},
          {"delta_c", o.delta_c},
          {"outcome", o.success ? "placed" : "failed"}};
}

}  // namespace nsp
