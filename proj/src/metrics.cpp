#include "nsp/metrics.hpp"

#include <charconv>
#include <ostream>

#include "nsp/errors.hpp"

namespace nsp {

std::optional<double> Tally::ratio() const {
  if (arrived == 0) return std::nullopt;
  return static_cast<double>(accepted) / static_cast<double>(arrived);
}

double gar(const std::vector<AcceptanceRecord>& records, std::size_t upto) {
  if (upto == 0) throw ContractViolation("gar needs at least one arrival");
  if (records.empty()) throw ContractViolation("gar over an empty record stream");
  const std::size_t n = std::min(upto, records.size());
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i) accepted += records[i].accepted ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(n);
}

double gar(const std::vector<AcceptanceRecord>& records) {
  return gar(records, records.size());
}

PhaseResult tar(const std::vector<AcceptanceRecord>& records, std::size_t phase,
                std::size_t phase_size) {
  if (phase_size == 0) throw ContractViolation("phase size must be positive");
  PhaseResult r;
  r.phase = phase;
  const std::size_t begin = phase * phase_size;
  const std::size_t end = std::min(begin + phase_size, records.size());
  for (std::size_t i = begin; i < end; ++i) {
    auto& t = r.per_class[records[i].class_id];
    ++t.arrived;
    ++r.arrived;
    if (records[i].accepted) {
      ++t.accepted;
      ++r.accepted;
    }
  }
  r.complete = r.arrived == phase_size;
  if (r.complete) {
    r.ratio = static_cast<double>(r.accepted) / static_cast<double>(phase_size);
  }
  return r;
}

std::vector<PhaseResult> tar_phases(const std::vector<AcceptanceRecord>& records,
                                    std::size_t phase_size) {
  if (phase_size == 0) throw ContractViolation("phase size must be positive");
  // every class seen anywhere gets a column in every phase
  std::vector<PhaseResult> out;
  const auto seen = class_tallies(records);
  for (std::size_t p = 0; p * phase_size < records.size(); ++p) {
    auto r = tar(records, p, phase_size);
    for (const auto& entry : seen) r.per_class.try_emplace(entry.first);
    out.push_back(std::move(r));
  }
  return out;
}

std::map<int, Tally> class_tallies(const std::vector<AcceptanceRecord>& records) {
  std::map<int, Tally> out;
  for (const auto& r : records) {
    auto& t = out[r.class_id];
    ++t.arrived;
    if (r.accepted) ++t.accepted;
  }
  return out;
}

std::optional<double> per_class_ratio(const std::vector<AcceptanceRecord>& records,
                                      int class_id) {
  Tally t;
  for (const auto& r : records) {
    if (r.class_id != class_id) continue;
    ++t.arrived;
    if (r.accepted) ++t.accepted;
  }
  return t.ratio();
}

MetricsStream::MetricsStream(std::size_t phase_size) : phase_size_(phase_size) {
  if (phase_size_ == 0) throw ConfigError("phase size must be positive");
}

void MetricsStream::add(const AcceptanceRecord& record) {
  if (record.arrival_index != records_.size() + 1) {
    throw InvariantError("acceptance records must have dense arrival indices");
  }
  records_.push_back(record);
  if (record.accepted) ++accepted_;
}

double MetricsStream::running_gar() const {
  if (records_.empty()) throw ContractViolation("gar over an empty record stream");
  return static_cast<double>(accepted_) / static_cast<double>(records_.size());
}

nlohmann::json MetricsStream::save_state() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : records_) {
    rows.push_back({r.arrival_index, r.uid, r.class_id, r.accepted, r.time});
  }
  return {{"phase_size", phase_size_}, {"records", rows}};
}

void MetricsStream::load_state(const nlohmann::json& state) {
  phase_size_ = state.at("phase_size").get<std::size_t>();
  records_.clear();
  accepted_ = 0;
  for (const auto& row : state.at("records")) {
    AcceptanceRecord r;
    r.arrival_index = row.at(0).get<std::size_t>();
    r.uid = row.at(1).get<std::uint64_t>();
    r.class_id = row.at(2).get<int>();
    r.accepted = row.at(3).get<bool>();
    r.time = row.at(4).get<double>();
    add(r);
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_records_csv(std::ostream& out,
                       const std::vector<AcceptanceRecord>& records) {
  out << "arrival_index,time,class,accepted,gar_running\n";
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.accepted) ++accepted;
    out << r.arrival_index << ',' << format_double(r.time) << ',' << r.class_id
        << ',' << (r.accepted ? 1 : 0) << ','
        << format_double(static_cast<double>(accepted) / static_cast<double>(i + 1))
        << '\n';
  }
}

void write_phases_csv(std::ostream& out, const std::vector<PhaseResult>& phases) {
  out << "phase,tar,tar_per_class\n";
  for (const auto& p : phases) {
    out << p.phase << ',' << (p.ratio ? format_double(*p.ratio) : "partial") << ',';
    bool first = true;
    for (const auto& [cls, tally] : p.per_class) {
      if (!first) out << ';';
      first = false;
      const auto ratio = tally.ratio();
      out << cls << ':' << (ratio ? format_double(*ratio) : "undefined");
    }
    out << '\n';
  }
}

nlohmann::json plot_series(const std::vector<AcceptanceRecord>& records,
                           std::size_t phase_size) {
  nlohmann::json out = nlohmann::json::object();
  nlohmann::json gar_series = nlohmann::json::array();
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].accepted) ++accepted;
    gar_series.push_back(
        {i + 1, static_cast<double>(accepted) / static_cast<double>(i + 1)});
  }
  out["gar"] = gar_series;
  nlohmann::json tar_series = nlohmann::json::array();
  std::map<int, nlohmann::json> per_class;
  for (const auto& p : tar_phases(records, phase_size)) {
    if (!p.ratio) continue;
    tar_series.push_back({p.phase, *p.ratio});
    for (const auto& [cls, tally] : p.per_class) {
      auto& series = per_class[cls];
      if (series.is_null()) series = nlohmann::json::array();
      // a class absent from a phase has no point there
      if (const auto r = tally.ratio()) series.push_back({p.phase, *r});
    }
  }
  out["tar"] = tar_series;
  for (auto& [cls, series] : per_class) {
    out["tar_class_" + std::to_string(cls)] = series;
  }
  return out;
}

}  // namespace nsp
