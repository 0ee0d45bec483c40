#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsp/agent.hpp"
#include "nsp/heuristic.hpp"
#include "nsp/metrics.hpp"
#include "nsp/substrate.hpp"
#include "nsp/traffic.hpp"

namespace nsp {

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// What a policy did with one request. When accepted, the network already
/// holds ledger; when rejected, the network is unchanged.
struct PolicyDecision {
  bool accepted = false;
  ResourceDelta ledger;
};

class PlacementPolicy {
 public:
  virtual ~PlacementPolicy() = default;
  virtual std::string name() const = 0;
  virtual PolicyDecision place(const SliceRequest& request, SubstrateNetwork& net) = 0;
  virtual nlohmann::json save_state() const { return nullptr; }
  virtual void load_state(const nlohmann::json&) {}
};

class HeuristicPolicy final : public PlacementPolicy {
 public:
  explicit HeuristicPolicy(const PlacementHeuristic& heuristic) : heuristic_(heuristic) {}
  std::string name() const override { return "heuristic:" + heuristic_.name(); }
  PolicyDecision place(const SliceRequest& request, SubstrateNetwork& net) override;

 private:
  const PlacementHeuristic& heuristic_;
};

/// Runs the agent on every arrival; learns after each episode when
/// training, otherwise acts with frozen parameters.
class AgentPolicy final : public PlacementPolicy {
 public:
  AgentPolicy(Agent& agent, bool training, ActionMode mode = ActionMode::Sample)
      : agent_(agent), training_(training), mode_(mode) {}
  std::string name() const override;
  PolicyDecision place(const SliceRequest& request, SubstrateNetwork& net) override;
  nlohmann::json save_state() const override { return agent_.save_state(); }
  void load_state(const nlohmann::json& state) override { agent_.load_state(state); }

  const std::optional<UpdateStats>& last_update() const { return last_update_; }

 private:
  Agent& agent_;
  bool training_;
  ActionMode mode_;
  std::optional<UpdateStats> last_update_;
};

struct RunLimits {
  /// Arrivals at or after the horizon are left pending; departures up to
  /// and including it are processed.
  double horizon = std::numeric_limits<double>::infinity();
  /// Stop once this many arrivals have been handled in total.
  std::size_t max_arrivals = std::numeric_limits<std::size_t>::max();
};

struct InSystemSlice {
  std::uint64_t uid = 0;
  double departure = 0.0;
  ResourceDelta ledger;
};

/// Discrete-event loop: departures are released before arrivals at equal
/// times, ties broken by uid; each arrival is one atomic placement episode.
class Simulator {
 public:
  using ArrivalHook = std::function<void(const AcceptanceRecord&, Simulator&)>;

  /// Generated traffic from the model, seeded.
  Simulator(SubstrateNetwork net, std::shared_ptr<const LoadModel> model,
            std::uint64_t seed, GeneratorOptions generator = {},
            std::size_t phase_size = kDefaultPhaseSize);
  /// Replays fixed requests in arrival order.
  Simulator(SubstrateNetwork net, std::vector<SliceRequest> replay,
            std::size_t phase_size = kDefaultPhaseSize);

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Processes events until a limit is reached, traffic runs out or a
  /// hook calls request_stop(). Returns the arrivals handled by this call.
  std::size_t run(PlacementPolicy& policy, const RunLimits& limits = {},
                  const ArrivalHook& hook = {});

  void request_stop() { stop_ = true; }

  const SubstrateNetwork& network() const { return net_; }
  SubstrateNetwork& network() { return net_; }
  double clock() const { return clock_; }
  std::size_t arrivals() const { return metrics_.records().size(); }
  std::size_t in_system() const { return ledger_.size(); }
  const MetricsStream& metrics() const { return metrics_; }
  const std::vector<AcceptanceRecord>& records() const { return metrics_.records(); }

  /// Checks after every event that residual deficits equal the summed
  /// ledgers of in-system slices. On by default.
  void set_verify_invariants(bool on) { verify_ = on; }
  /// Throws InvariantError when the conservation identity is broken.
  void check_conservation() const;

  /// Opaque quiescent-state snapshot including the policy's state.
  nlohmann::json snapshot(const PlacementPolicy& policy) const;
  /// Throws CompatibilityError on version or topology mismatch.
  void restore(const nlohmann::json& snap, PlacementPolicy& policy);

 private:
  struct Departure {
    double time;
    std::uint64_t uid;
    bool operator>(const Departure& o) const {
      return time != o.time ? time > o.time : uid > o.uid;
    }
  };

  std::optional<double> peek_arrival() const;
  SliceRequest take_arrival();
  void release_until(double t, bool inclusive);
  void advance_clock(double t);

  SubstrateNetwork net_;
  std::shared_ptr<const LoadModel> model_;
  std::optional<ArrivalStream> stream_;
  std::vector<SliceRequest> replay_;
  std::size_t replay_cursor_ = 0;
  double clock_ = 0.0;
  std::map<std::uint64_t, InSystemSlice> ledger_;
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures_;
  MetricsStream metrics_;
  bool verify_ = true;
  bool stop_ = false;
};

nlohmann::json delta_to_json(const ResourceDelta& d);
ResourceDelta delta_from_json(const nlohmann::json& j);

}  // namespace nsp
