#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nsp {

/// Outcome of one arrival. arrival_index is 1-based and dense.
struct AcceptanceRecord {
  std::size_t arrival_index = 0;
  std::uint64_t uid = 0;
  int class_id = 0;
  bool accepted = false;
  double time = 0.0;
};

inline constexpr std::size_t kDefaultPhaseSize = 10000;

struct Tally {
  std::size_t arrived = 0;
  std::size_t accepted = 0;

  /// nullopt when nothing arrived.
  std::optional<double> ratio() const;
};

/// Accepted / arrived over records 1..upto. upto = 0 is a contract
/// violation; upto beyond the stream is clamped.
double gar(const std::vector<AcceptanceRecord>& records, std::size_t upto);
double gar(const std::vector<AcceptanceRecord>& records);

/// Acceptance in one phase. ratio is unset while the phase is partial.
struct PhaseResult {
  std::size_t phase = 0;
  std::size_t accepted = 0;
  std::size_t arrived = 0;
  bool complete = false;
  std::optional<double> ratio;
  std::map<int, Tally> per_class;
};

PhaseResult tar(const std::vector<AcceptanceRecord>& records, std::size_t phase,
                std::size_t phase_size = kDefaultPhaseSize);
/// Every phase touched by the records, the last possibly partial.
std::vector<PhaseResult> tar_phases(const std::vector<AcceptanceRecord>& records,
                                    std::size_t phase_size = kDefaultPhaseSize);

/// Class-filtered acceptance ratio; nullopt if the class never arrived.
std::optional<double> per_class_ratio(const std::vector<AcceptanceRecord>& records,
                                      int class_id);
std::map<int, Tally> class_tallies(const std::vector<AcceptanceRecord>& records);

/// Incremental GAR/TAR bookkeeping for a running simulation.
class MetricsStream {
 public:
  explicit MetricsStream(std::size_t phase_size = kDefaultPhaseSize);

  void add(const AcceptanceRecord& record);
  const std::vector<AcceptanceRecord>& records() const { return records_; }
  std::size_t phase_size() const { return phase_size_; }
  double running_gar() const;

  nlohmann::json save_state() const;
  void load_state(const nlohmann::json& state);

 private:
  std::size_t phase_size_;
  std::vector<AcceptanceRecord> records_;
  std::size_t accepted_ = 0;
};

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

/// arrival_index,time,class,accepted,gar_running
void write_records_csv(std::ostream& out, const std::vector<AcceptanceRecord>& records);
/// phase,tar,tar_per_class. Partial phases print "partial", classes
/// without arrivals "undefined"; tar_per_class is "class:ratio;...".
void write_phases_csv(std::ostream& out, const std::vector<PhaseResult>& phases);

/// Series name -> [[x, y], ...]: gar vs arrivals, tar vs phase, and
/// per-class tar vs phase.
nlohmann::json plot_series(const std::vector<AcceptanceRecord>& records,
                           std::size_t phase_size);

}  // namespace nsp
