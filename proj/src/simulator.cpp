#include "nsp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

PolicyDecision HeuristicPolicy::place(const SliceRequest& request,
                                      SubstrateNetwork& net) {
  auto result = heu_place_full(request, net, heuristic_);
  return {result.accepted, std::move(result.ledger)};
}

std::string AgentPolicy::name() const {
  return std::string(training_ ? "train:" : "frozen:") +
         to_string(agent_.config().variant);
}

PolicyDecision AgentPolicy::place(const SliceRequest& request, SubstrateNetwork& net) {
  auto trace = agent_.run_episode(request, net, mode_);
  if (training_) last_update_ = agent_.update(trace);
  return {trace.accepted, std::move(trace.ledger)};
}

Simulator::Simulator(SubstrateNetwork net, std::shared_ptr<const LoadModel> model,
                     std::uint64_t seed, GeneratorOptions generator,
                     std::size_t phase_size)
    : net_(std::move(net)), model_(std::move(model)), metrics_(phase_size) {
  if (!model_) throw ContractViolation("simulator needs a load model");
  stream_.emplace(*model_, seed, std::move(generator));
}

Simulator::Simulator(SubstrateNetwork net, std::vector<SliceRequest> replay,
                     std::size_t phase_size)
    : net_(std::move(net)), replay_(std::move(replay)), metrics_(phase_size) {
  std::stable_sort(replay_.begin(), replay_.end(),
                   [](const SliceRequest& a, const SliceRequest& b) {
                     return a.arrival_time < b.arrival_time;
                   });
}

std::optional<double> Simulator::peek_arrival() const {
  if (stream_) return stream_->peek_time();
  if (replay_cursor_ < replay_.size()) return replay_[replay_cursor_].arrival_time;
  return std::nullopt;
}

SliceRequest Simulator::take_arrival() {
  if (stream_) {
    auto r = stream_->next();
    if (!r) throw ContractViolation("no arrival left");
    return std::move(*r);
  }
  return replay_.at(replay_cursor_++);
}

void Simulator::advance_clock(double t) {
  if (t < clock_) {
    std::ostringstream msg;
    msg << "event time " << t << " precedes the clock " << clock_;
    throw InvariantError(msg.str());
  }
  clock_ = t;
}

void Simulator::release_until(double t, bool inclusive) {
  while (!departures_.empty()) {
    const Departure d = departures_.top();
    if (inclusive ? d.time > t : d.time >= t) break;
    departures_.pop();
    const auto it = ledger_.find(d.uid);
    if (it == ledger_.end()) throw InvariantError("departure for a slice not in the system");
    advance_clock(d.time);
    net_.release(it->second.ledger);
    ledger_.erase(it);
    if (verify_) check_conservation();
  }
}

std::size_t Simulator::run(PlacementPolicy& policy, const RunLimits& limits,
                           const ArrivalHook& hook) {
  std::size_t handled = 0;
  stop_ = false;
  while (!stop_ && arrivals() < limits.max_arrivals) {
    const auto t = peek_arrival();
    if (!t || *t >= limits.horizon) break;
    // Departures at the arrival instant go first.
    release_until(*t, true);
    SliceRequest request = take_arrival();
    advance_clock(request.arrival_time);
    if (ledger_.count(request.uid)) throw InvariantError("duplicate slice uid");

    auto decision = policy.place(request, net_);
    if (decision.accepted) {
      ledger_[request.uid] = {request.uid, request.departure_time(),
                              std::move(decision.ledger)};
      departures_.push({request.departure_time(), request.uid});
    }
    AcceptanceRecord record{arrivals() + 1, request.uid, request.class_id,
                            decision.accepted, request.arrival_time};
    metrics_.add(record);
    if (verify_) check_conservation();
    ++handled;
    if (hook) hook(record, *this);
  }
  if (!stop_ && std::isfinite(limits.horizon) && arrivals() < limits.max_arrivals) {
    release_until(limits.horizon, true);
  }
  return handled;
}

void Simulator::check_conservation() const {
  std::vector<double> expected_cpu(net_.node_count()), expected_ram(net_.node_count());
  std::vector<double> expected_bw(net_.links().size());
  for (const auto& [uid, slice] : ledger_) {
    for (const auto& n : slice.ledger.nodes) {
      expected_cpu.at(n.node) += n.cpu;
      expected_ram.at(n.node) += n.ram;
    }
    for (const auto& l : slice.ledger.links) expected_bw.at(l.link) += l.bw;
  }
  constexpr double tol = 1e-6;
  for (NodeId i = 0; i < net_.node_count(); ++i) {
    const auto& node = net_.node(i);
    if (std::abs(node.max_cpu - node.cap_cpu - expected_cpu[i]) > tol ||
        std::abs(node.max_ram - node.cap_ram - expected_ram[i]) > tol) {
      throw InvariantError("node " + std::to_string(i) +
                           " residual disagrees with the slice ledger");
    }
  }
  for (LinkId i = 0; i < net_.links().size(); ++i) {
    const auto& link = net_.link(i);
    if (std::abs(link.max_bw - link.cap_bw - expected_bw[i]) > tol) {
      throw InvariantError("link " + std::to_string(i) +
                           " residual disagrees with the slice ledger");
    }
  }
}

nlohmann::json delta_to_json(const ResourceDelta& d) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : d.nodes) nodes.push_back({n.node, n.cpu, n.ram});
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : d.links) links.push_back({l.link, l.bw});
  return {{"nodes", nodes}, {"links", links}};
}

ResourceDelta delta_from_json(const nlohmann::json& j) {
  ResourceDelta d;
  for (const auto& n : j.at("nodes")) {
    d.nodes.push_back({n.at(0).get<NodeId>(), n.at(1).get<double>(), n.at(2).get<double>()});
  }
  for (const auto& l : j.at("links")) {
    d.links.push_back({l.at(0).get<LinkId>(), l.at(1).get<double>()});
  }
  return d;
}

nlohmann::json Simulator::snapshot(const PlacementPolicy& policy) const {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& [uid, s] : ledger_) {
    slices.push_back({{"uid", uid}, {"departure", s.departure}, {"ledger", delta_to_json(s.ledger)}});
  }
  nlohmann::json snap = {{"version", kSnapshotVersion},
                         {"fingerprint", net_.fingerprint()},
                         {"clock", clock_},
                         {"residuals", net_.residuals()},
                         {"slices", slices},
                         {"metrics", metrics_.save_state()},
                         {"policy", policy.name()},
                         {"policy_state", policy.save_state()}};
  if (stream_) {
    snap["source"] = {{"kind", "generated"}, {"stream", stream_->save_state()}};
  } else {
    snap["source"] = {{"kind", "replay"}, {"cursor", replay_cursor_}, {"size", replay_.size()}};
  }
  return snap;
}

void Simulator::restore(const nlohmann::json& snap, PlacementPolicy& policy) {
  if (snap.at("version").get<std::uint32_t>() != kSnapshotVersion) {
    throw CompatibilityError("snapshot version " + snap.at("version").dump() +
                             " is not supported");
  }
  if (snap.at("fingerprint").get<std::uint64_t>() != net_.fingerprint()) {
    throw CompatibilityError("snapshot was taken on a different topology");
  }
  if (snap.at("policy").get<std::string>() != policy.name()) {
    throw CompatibilityError("snapshot was taken with policy " +
                             snap.at("policy").get<std::string>());
  }
  const auto& source = snap.at("source");
  const auto kind = source.at("kind").get<std::string>();
  if ((kind == "generated") != stream_.has_value()) {
    throw CompatibilityError("snapshot traffic source does not match this simulator");
  }
  if (stream_) {
    stream_->load_state(source.at("stream"));
  } else {
    if (source.at("size").get<std::size_t>() != replay_.size()) {
      throw CompatibilityError("snapshot replay length does not match");
    }
    replay_cursor_ = source.at("cursor").get<std::size_t>();
  }
  net_.restore_residuals(snap.at("residuals").get<std::vector<double>>());
  ledger_.clear();
  departures_ = {};
  for (const auto& s : snap.at("slices")) {
    InSystemSlice slice{s.at("uid").get<std::uint64_t>(), s.at("departure").get<double>(),
                        delta_from_json(s.at("ledger"))};
    departures_.push({slice.departure, slice.uid});
    ledger_[slice.uid] = std::move(slice);
  }
  clock_ = snap.at("clock").get<double>();
  metrics_.load_state(snap.at("metrics"));
  policy.load_state(snap.at("policy_state"));
  if (verify_) check_conservation();
}

}  // namespace nsp
