#include "nsp/heuristic.hpp"

namespace nsp {

HeuristicAdvice heu_select(const PlacementEpisode& episode,
                           const SubstrateNetwork& net) {
  HeuristicAdvice best;
  double best_balance = 0.0;
  double best_consumption = 0.0;
  for (NodeId s : net.servers()) {
    const auto path = episode.feasible(net, s);
    if (!path) continue;
    const double balance = episode.load_balance(net, s);
    const double consumption = PlacementEpisode::consumption(*path);
    if (!best.server || balance > best_balance ||
        (balance == best_balance && consumption > best_consumption)) {
      best.server = s;
      best_balance = balance;
      best_consumption = consumption;
    }
  }
  return best;
}

HeuristicPlacement heu_place_full(const SliceRequest& request,
                                  SubstrateNetwork& net,
                                  const PlacementHeuristic& heuristic) {
  PlacementEpisode episode(request, net);
  HeuristicPlacement result;
  while (!episode.finished()) {
    const auto advice = heuristic.advise(episode, net);
    if (!advice.server) {
      // Nothing fits: fail on the first server so the trace records the
      // rejection step, as any action would.
      result.trace.push_back(episode.apply_action(net, net.servers().front()));
      break;
    }
    result.trace.push_back(episode.apply_action(net, *advice.server));
  }
  result.accepted = episode.complete();
  if (result.accepted) result.ledger = episode.ledger();
  return result;
}

HeuristicPlacement heu_place_full(const SliceRequest& request,
                                  SubstrateNetwork& net) {
  return heu_place_full(request, net, GreedyHeuristic{});
}

}  // namespace nsp
