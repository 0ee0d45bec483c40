#include "nsp/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

const char* to_string(Resource r) {
  switch (r) {
    case Resource::Cpu: return "cpu";
    case Resource::Ram: return "ram";
    case Resource::Bw: return "bw";
  }
  return "unknown";
}

double SliceClass::demand(Resource r) const {
  const auto n = static_cast<double>(vnf_count);
  switch (r) {
    case Resource::Cpu: return n * req_cpu;
    case Resource::Ram: return n * req_ram;
    case Resource::Bw: return (n - 1.0) * req_bw;
  }
  return 0.0;
}

double SliceClass::rate_bound() const {
  if (const auto* d = std::get_if<DynamicArrival>(&arrival)) return d->amplitude;
  return std::get<StaticArrival>(arrival).rate;
}

void SliceClass::validate() const {
  auto fail = [this](const std::string& what) {
    throw ConfigError("class " + std::to_string(id) +
                      (name.empty() ? "" : " (" + name + ")") + ": " + what);
  };
  if (vnf_count < 1) fail("vnf_count must be >= 1");
  if (!(req_cpu > 0.0) || !(req_ram > 0.0)) fail("cpu/ram demands must be > 0");
  if (vnf_count > 1 && !(req_bw > 0.0)) fail("bandwidth demand must be > 0");
  if (!(mean_lifetime > 0.0)) fail("mean lifetime must be > 0");
  if (const auto* d = std::get_if<DynamicArrival>(&arrival)) {
    if (!(d->amplitude >= 0.0)) fail("amplitude must be >= 0");
    if (!(d->period > 0.0)) fail("period must be > 0");
  } else if (!(std::get<StaticArrival>(arrival).rate >= 0.0)) {
    fail("arrival rate must be >= 0");
  }
}

double arrival_rate(const SliceClass& k, double t) {
  if (const auto* d = std::get_if<DynamicArrival>(&k.arrival)) {
    const double s = std::sin(std::numbers::pi * t / d->period);
    return d->amplitude * s * s;
  }
  return std::get<StaticArrival>(k.arrival).rate;
}

LoadModel::LoadModel(std::vector<SliceClass> classes, ResourceTotals capacity)
    : classes_(std::move(classes)), capacity_(capacity) {}

const SliceClass& LoadModel::find_class(int id) const {
  for (const auto& k : classes_) {
    if (k.id == id) return k;
  }
  throw LookupError("unknown slice class " + std::to_string(id));
}

void LoadModel::validate() const {
  for (Resource j : kResources) {
    if (!(capacity_[j] > 0.0)) {
      throw ConfigError(std::string("total ") + to_string(j) +
                        " capacity must be > 0");
    }
  }
  std::vector<int> ids;
  for (const auto& k : classes_) {
    k.validate();
    ids.push_back(k.id);
    for (Resource j : kResources) {
      const double bound = capacity_[j] * k.mu() / k.demand(j);
      if (k.demand(j) > 0.0 && k.rate_bound() > bound * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "class " << k.id << (k.name.empty() ? "" : " (" + k.name + ")")
            << ": peak arrival rate " << k.rate_bound()
            << " exceeds the load bound C_j*mu/A_j = " << bound << " for "
            << to_string(j) << " (class load would exceed 1)";
        throw ConfigError(msg.str());
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("duplicate slice class id");
  }
}

double LoadModel::class_load(const SliceClass& k, Resource j, double t) const {
  return arrival_rate(k, t) / k.mu() * k.demand(j) / capacity_[j];
}

double LoadModel::global_load(Resource j, double t) const {
  double sum = 0.0;
  for (const auto& k : classes_) sum += class_load(k, j, t);
  return sum;
}

std::vector<double> LoadModel::load_forecast(Resource j, double t_a,
                                             std::size_t points) const {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = global_load(j, t_a + static_cast<double>(i));
  }
  return out;
}

double SliceRequest::incident_bw(std::size_t v) const {
  double sum = 0.0;
  if (v > 0 && v - 1 < vls.size()) sum += vls[v - 1];
  if (v < vls.size()) sum += vls[v];
  return sum;
}

SliceRequest make_request(const SliceClass& k, std::uint64_t uid,
                          double arrival_time, double lifetime) {
  SliceRequest r;
  r.uid = uid;
  r.class_id = k.id;
  r.arrival_time = arrival_time;
  r.lifetime = lifetime;
  r.vnfs.assign(k.vnf_count, VnfDemand{k.req_cpu, k.req_ram});
  r.vls.assign(k.vnf_count - 1, k.req_bw);
  return r;
}

ArrivalStream::ArrivalStream(const LoadModel& model, std::uint64_t seed,
                             GeneratorOptions options)
    : model_(&model), options_(std::move(options)) {
  for (const auto& k : model.classes()) {
    const auto cid = static_cast<std::uint32_t>(k.id);
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32), cid,
                      0x9e3779b9U};
    ClassStream s;
    s.cls = &k;
    s.rng.seed(seq);
    streams_.push_back(std::move(s));
  }
  for (auto& s : streams_) advance(s);
}

void ArrivalStream::advance(ClassStream& s) {
  s.pending.reset();
  const double bound = s.cls->rate_bound();
  if (!(bound > 0.0)) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    s.clock += -std::log1p(-unit(s.rng)) / bound;
    const double rate = options_.intensity ? options_.intensity(*s.cls, s.clock)
                                           : arrival_rate(*s.cls, s.clock);
    if (unit(s.rng) * bound < rate) {
      s.pending = s.clock;
      return;
    }
  }
}

double ArrivalStream::sample_lifetime(ClassStream& s) {
  if (options_.lifetime == LifetimeDistribution::Deterministic) {
    return s.cls->mean_lifetime;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double life = 0.0;
  // Exponential draws of exactly zero are rerolled: lifetimes are > 0.
  while (!(life > 0.0)) life = -std::log1p(-unit(s.rng)) * s.cls->mean_lifetime;
  return life;
}

std::optional<double> ArrivalStream::peek_time() const {
  std::optional<double> best;
  for (const auto& s : streams_) {
    if (s.pending && (!best || *s.pending < *best)) best = s.pending;
  }
  return best;
}

std::optional<SliceRequest> ArrivalStream::next() {
  ClassStream* best = nullptr;
  for (auto& s : streams_) {
    if (!s.pending) continue;
    if (!best || *s.pending < *best->pending ||
        (*s.pending == *best->pending && s.cls->id < best->cls->id)) {
      best = &s;
    }
  }
  if (!best) return std::nullopt;
  const double t = *best->pending;
  const double life = sample_lifetime(*best);
  SliceRequest r = make_request(*best->cls, next_uid_++, t, life);
  advance(*best);
  return r;
}

nlohmann::json ArrivalStream::save_state() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& s : streams_) {
    std::ostringstream rng;
    rng << s.rng;
    classes.push_back({{"class", s.cls->id},
                       {"rng", rng.str()},
                       {"clock", s.clock},
                       {"pending", s.pending ? nlohmann::json(*s.pending)
                                             : nlohmann::json(nullptr)}});
  }
  return {{"next_uid", next_uid_}, {"classes", classes}};
}

void ArrivalStream::load_state(const nlohmann::json& state) {
  const auto& classes = state.at("classes");
  if (classes.size() != streams_.size()) {
    throw CompatibilityError("arrival stream state has a different class set");
  }
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    auto& s = streams_[i];
    const auto& c = classes[i];
    if (c.at("class").get<int>() != s.cls->id) {
      throw CompatibilityError("arrival stream state has a different class set");
    }
    std::istringstream rng(c.at("rng").get<std::string>());
    rng >> s.rng;
    s.clock = c.at("clock").get<double>();
    if (c.at("pending").is_null()) {
      s.pending.reset();
    } else {
      s.pending = c.at("pending").get<double>();
    }
  }
  next_uid_ = state.at("next_uid").get<std::uint64_t>();
}

namespace {

bool event_less(const TrafficEvent& a, const TrafficEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.class_id != b.class_id) return a.class_id < b.class_id;
  return a.uid < b.uid;
}

}  // namespace

std::vector<TrafficEvent> generate_events(const LoadModel& model,
                                          double horizon, std::uint64_t seed,
                                          GeneratorOptions options,
                                          std::size_t max_arrivals) {
  if (!(horizon > 0.0)) throw ContractViolation("horizon must be > 0");
  if (std::isinf(horizon) && max_arrivals == std::numeric_limits<std::size_t>::max()) {
    throw ContractViolation("event generation needs a finite horizon or arrival count");
  }
  ArrivalStream stream(model, seed, std::move(options));
  std::vector<TrafficEvent> events;
  std::size_t arrivals = 0;
  while (auto t = stream.peek_time()) {
    if (*t >= horizon || arrivals == max_arrivals) break;
    const SliceRequest r = *stream.next();
    ++arrivals;
    events.push_back({r.arrival_time, EventKind::Arrival, r.uid, r.class_id, r.lifetime});
    events.push_back({r.departure_time(), EventKind::Departure, r.uid, r.class_id});
  }
  std::sort(events.begin(), events.end(), event_less);
  return events;
}

void write_events(std::ostream& out, const std::vector<TrafficEvent>& events) {
  for (const auto& e : events) {
    nlohmann::json line = {
        {"time", e.time},
        {"kind", e.kind == EventKind::Arrival ? "arrival" : "departure"},
        {"uid", e.uid},
        {"class", e.class_id}};
    if (e.kind == EventKind::Arrival) line["lifetime"] = e.lifetime;
    out << line.dump() << '\n';
  }
}

std::vector<TrafficEvent> read_events(std::istream& in) {
  std::vector<TrafficEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrafficEvent e;
      e.time = j.at("time").get<double>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "arrival") {
        e.kind = EventKind::Arrival;
      } else if (kind == "departure") {
        e.kind = EventKind::Departure;
      } else {
        throw ConfigError("unknown event kind '" + kind + "'");
      }
      e.uid = j.at("uid").get<std::uint64_t>();
      e.class_id = j.at("class").get<int>();
      e.lifetime = j.value("lifetime", 0.0);
      events.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("event line " + std::to_string(lineno) + ": " +
                        ex.what());
    }
  }
  return events;
}

std::vector<SliceRequest> requests_from_events(
    const LoadModel& model, const std::vector<TrafficEvent>& events) {
  std::map<std::uint64_t, double> departures;
  for (const auto& e : events) {
    if (e.kind == EventKind::Departure) departures[e.uid] = e.time;
  }
  std::vector<SliceRequest> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::Arrival) continue;
    const auto dep = departures.find(e.uid);
    if (dep == departures.end()) {
      throw ConfigError("arrival uid " + std::to_string(e.uid) +
                        " has no departure record");
    }
    // The recorded lifetime reproduces the departure bit for bit.
    const double life = e.lifetime > 0.0 ? e.lifetime : dep->second - e.time;
    if (!(life > 0.0)) {
      throw ConfigError("arrival uid " + std::to_string(e.uid) +
                        " departs before it arrives");
    }
    out.push_back(make_request(model.find_class(e.class_id), e.uid, e.time, life));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SliceRequest& a, const SliceRequest& b) {
                     if (a.arrival_time != b.arrival_time)
                       return a.arrival_time < b.arrival_time;
                     if (a.class_id != b.class_id) return a.class_id < b.class_id;
                     return a.uid < b.uid;
                   });
  return out;
}

}  // namespace nsp
