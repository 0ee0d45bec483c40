#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsp/placement.hpp"

namespace nsp {

/// The advised server for the pending VNF, or nothing when no server is
/// feasible.
struct HeuristicAdvice {
  std::optional<NodeId> server;
};

class PlacementHeuristic {
 public:
  virtual ~PlacementHeuristic() = default;
  virtual HeuristicAdvice advise(const PlacementEpisode& episode,
                                 const SubstrateNetwork& net) const = 0;
  virtual std::string name() const = 0;
};

/// Greedy rule: among feasible servers maximize (load balance, then
/// consumption signal); ties go to the smallest server id.
HeuristicAdvice heu_select(const PlacementEpisode& episode,
                           const SubstrateNetwork& net);

class GreedyHeuristic final : public PlacementHeuristic {
 public:
  HeuristicAdvice advise(const PlacementEpisode& episode,
                         const SubstrateNetwork& net) const override {
    return heu_select(episode, net);
  }
  std::string name() const override { return "greedy"; }
};

struct HeuristicPlacement {
  bool accepted = false;
  std::vector<PlacementOutcome> trace;
  ResourceDelta ledger;  // empty unless accepted
};

/// Places a whole request with the heuristic. A rejected request leaves
/// the network untouched.
HeuristicPlacement heu_place_full(const SliceRequest& request,
                                  SubstrateNetwork& net,
                                  const PlacementHeuristic& heuristic);
HeuristicPlacement heu_place_full(const SliceRequest& request,
                                  SubstrateNetwork& net);

}  // namespace nsp
