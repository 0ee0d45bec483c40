#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "nsp/substrate.hpp"
#include "nsp/traffic.hpp"

namespace nsp {

struct Route {
  std::vector<NodeId> nodes;  // src .. dst; a single node for src == dst
  std::vector<LinkId> links;

  std::size_t hops() const { return links.size(); }
};

/// Minimum-hop path over links with residual >= bw. Among shortest paths
/// the lexicographically smallest node sequence wins. src == dst yields an
/// empty path.
std::optional<Route> route(const SubstrateNetwork& net, NodeId src, NodeId dst,
                           double bw);

enum class ActionSet { Servers, AllNodes };

struct PlacementOutcome {
  bool success = false;
  bool terminal = false;
  std::size_t vnf = 0;  // 0-based index of the VNF this step placed
  NodeId target = 0;
  double delta_a = 0.0;  // acceptance: +100 / -100
  double delta_b = 0.0;  // load balancing
  double delta_c = 0.0;  // resource consumption, 1/|P| or 1
  Route path;

  double product() const { return delta_a * delta_b * delta_c; }
};

inline constexpr double kAcceptReward = 100.0;
inline constexpr double kRejectReward = -100.0;
/// Max per-step product is 100 * 2 * 1, so dividing the terminal sum by
/// 20 * T maps its analytic maximum onto 10.
inline constexpr double kRewardNormalizer = 20.0;

/// Sequential placement of one request. Tracks chi, hosts and the
/// ledger of everything this request committed.
class PlacementEpisode {
 public:
  PlacementEpisode(SliceRequest request, const SubstrateNetwork& net,
                   ActionSet actions = ActionSet::Servers);

  const SliceRequest& request() const { return request_; }
  /// 0-based index of the VNF to place next.
  std::size_t next_vnf() const { return next_; }
  /// m_v: VNFs still to place, including the current one.
  std::size_t remaining() const { return request_.size() - next_; }
  bool complete() const { return next_ == request_.size(); }
  bool failed() const { return failed_; }
  bool finished() const { return complete() || failed_; }

  const std::vector<std::size_t>& chi() const { return chi_; }
  const std::vector<NodeId>& hosts() const { return hosts_; }
  const ResourceDelta& ledger() const { return ledger_; }
  const std::vector<PlacementOutcome>& outcomes() const { return outcomes_; }
  ActionSet action_set() const { return actions_; }

  /// Route for the pending VNF on target if cpu, ram and the link to the
  /// previous VNF's host all fit; nullopt otherwise.
  std::optional<Route> feasible(const SubstrateNetwork& net, NodeId target) const;

  /// Load-balancing signal for target, from residuals that exclude this
  /// request's own commitments.
  double load_balance(const SubstrateNetwork& net, NodeId target) const;

  /// Consumption signal of placing on target given path: 1/|P| or 1.
  static double consumption(const Route& path);

  /// Places the pending VNF. On failure the whole request is rolled back
  /// and the outcome is terminal.
  PlacementOutcome apply_action(SubstrateNetwork& net, NodeId target);

  /// Releases everything this request committed. No-op on an empty ledger.
  void rollback(SubstrateNetwork& net);

 private:
  SliceRequest request_;
  ActionSet actions_;
  std::size_t next_ = 0;
  bool failed_ = false;
  std::vector<std::size_t> chi_;
  std::vector<NodeId> hosts_;
  std::vector<double> own_cpu_;
  std::vector<double> own_ram_;
  ResourceDelta ledger_;
  std::vector<PlacementOutcome> outcomes_;
};

struct EpisodeRewards {
  std::vector<double> rewards;  // r_{t+1} for each step t
  double unscaled_terminal = 0.0;
};

/// Per-step rewards: 0 on intermediate successes, the scaled sum of
/// per-step products on the final success, -100 on a failed step.
EpisodeRewards episode_reward(const std::vector<PlacementOutcome>& outcomes,
                              std::size_t episode_length);

nlohmann::json trace_record(std::uint64_t uid, std::size_t step,
                            const PlacementOutcome& outcome);

}  // namespace nsp
