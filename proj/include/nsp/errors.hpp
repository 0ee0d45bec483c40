#pragma once

#include <stdexcept>
#include <string>

namespace nsp {

/// Invalid scenario, profile, or parameter values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A commit would drive a residual capacity below zero.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Residuals and ledgers disagree (release above max, rollback mismatch).
class AccountingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Internal invariant broken (non-monotone event time, ledger drift).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Snapshot or checkpoint cannot be used with the current setup.
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced non-finite parameters; the learning rates are too
/// large for the network.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nsp
