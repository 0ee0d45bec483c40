#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace nsp {

enum class Resource { Cpu = 0, Ram = 1, Bw = 2 };
inline constexpr std::array<Resource, 3> kResources{Resource::Cpu, Resource::Ram,
                                                    Resource::Bw};

const char* to_string(Resource r);

struct StaticArrival {
  double rate = 0.0;  // lambda^k
};

/// lambda^k(t) = amplitude * sin^2(pi t / period)
struct DynamicArrival {
  double amplitude = 0.0;
  double period = 1.0;
};

struct SliceClass {
  int id = 0;
  std::string name;
  std::size_t vnf_count = 1;
  double req_cpu = 0.0;
  double req_ram = 0.0;
  double req_bw = 0.0;
  double mean_lifetime = 1.0;  // 1 / mu^k
  std::variant<StaticArrival, DynamicArrival> arrival;

  bool is_dynamic() const {
    return std::holds_alternative<DynamicArrival>(arrival);
  }
  double mu() const { return 1.0 / mean_lifetime; }
  /// A^k_j: resource units held by one request of this class.
  double demand(Resource r) const;
  /// Upper bound of arrival_rate over t (thinning envelope).
  double rate_bound() const;
  void validate() const;
};

double arrival_rate(const SliceClass& k, double t);

struct ResourceTotals {
  double cpu = 0.0;
  double ram = 0.0;
  double bw = 0.0;

  double operator[](Resource r) const {
    return r == Resource::Cpu ? cpu : r == Resource::Ram ? ram : bw;
  }
};

/// Offered-load model over a set of static and dynamic classes.
class LoadModel {
 public:
  LoadModel() = default;
  LoadModel(std::vector<SliceClass> classes, ResourceTotals capacity);

  const std::vector<SliceClass>& classes() const { return classes_; }
  const ResourceTotals& capacity() const { return capacity_; }
  const SliceClass& find_class(int id) const;

  /// Checks class invariants and the per-class bound rho^k_j(t) <= 1.
  /// Throws ConfigError naming the offending class.
  void validate() const;

  double class_load(const SliceClass& k, Resource j, double t) const;
  double global_load(Resource j, double t) const;
  /// rho_j(t) for t = t_a, t_a + 1, ..., t_a + points - 1.
  std::vector<double> load_forecast(Resource j, double t_a,
                                    std::size_t points = 100) const;

 private:
  std::vector<SliceClass> classes_;
  ResourceTotals capacity_;
};

struct VnfDemand {
  double cpu = 0.0;
  double ram = 0.0;
};

/// A chain of VNFs; vls[i] is the bandwidth of the link (i, i + 1).
struct SliceRequest {
  std::uint64_t uid = 0;
  int class_id = 0;
  double arrival_time = 0.0;
  double lifetime = 0.0;
  std::vector<VnfDemand> vnfs;
  std::vector<double> vls;

  std::size_t size() const { return vnfs.size(); }
  double departure_time() const { return arrival_time + lifetime; }
  /// Bandwidth summed over the virtual links incident to VNF v (0-based).
  double incident_bw(std::size_t v) const;
};

SliceRequest make_request(const SliceClass& k, std::uint64_t uid,
                          double arrival_time, double lifetime);

enum class LifetimeDistribution { Exponential, Deterministic };

struct GeneratorOptions {
  LifetimeDistribution lifetime = LifetimeDistribution::Exponential;
  /// Replaces arrival_rate in thinning (rate must stay within the class's
  /// rate_bound). Unset in production.
  std::function<double(const SliceClass&, double)> intensity;
};

/// Lazily merged non-homogeneous Poisson arrivals over all classes.
/// Each class samples by thinning from its own RNG sub-stream derived
/// from the master seed.
class ArrivalStream {
 public:
  ArrivalStream(const LoadModel& model, std::uint64_t seed,
                GeneratorOptions options = {});

  /// Next arrival in (time, class id) order; nullopt if no class can
  /// ever produce another arrival.
  std::optional<SliceRequest> next();
  /// Time of the next arrival without consuming it.
  std::optional<double> peek_time() const;

  nlohmann::json save_state() const;
  void load_state(const nlohmann::json& state);

 private:
  struct ClassStream {
    const SliceClass* cls = nullptr;
    std::mt19937_64 rng;
    double clock = 0.0;
    std::optional<double> pending;
  };

  void advance(ClassStream& s);
  double sample_lifetime(ClassStream& s);

  const LoadModel* model_;
  GeneratorOptions options_;
  std::vector<ClassStream> streams_;
  std::uint64_t next_uid_ = 0;
};

enum class EventKind { Departure = 0, Arrival = 1 };

struct TrafficEvent {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  std::uint64_t uid = 0;
  int class_id = 0;
  double lifetime = 0.0;  // arrivals only
};

/// Arrivals in [0, horizon), at most max_arrivals of them, plus the
/// departure of each, sorted by (time, departures first, class id, uid).
std::vector<TrafficEvent> generate_events(
    const LoadModel& model, double horizon, std::uint64_t seed,
    GeneratorOptions options = {},
    std::size_t max_arrivals = std::numeric_limits<std::size_t>::max());

/// One JSON object per line: {"time", "kind", "uid", "class"}, plus
/// "lifetime" on arrivals.
void write_events(std::ostream& out, const std::vector<TrafficEvent>& events);
std::vector<TrafficEvent> read_events(std::istream& in);

/// Rebuilds arrival requests from an event list (lifetime = departure -
/// arrival). Throws ConfigError on unknown classes or missing departures.
std::vector<SliceRequest> requests_from_events(
    const LoadModel& model, const std::vector<TrafficEvent>& events);

}  // namespace nsp
