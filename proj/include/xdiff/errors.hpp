#pragma once

#include <stdexcept>
#include <string>

namespace xdiff {

/// Invalid user configuration: bad key, out-of-range value, inadmissible initial data.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a size or grid precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A state left the admissible set (u < 0 or v <= 0 somewhere).
class StateError : public std::runtime_error {
 public:
  StateError(const std::string& what, std::size_t index)
      : std::runtime_error(what + " at cell " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Recoverable failure of a single implicit step; the driver retries with a smaller dt.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NewtonDivergence : public SolverError {
 public:
  using SolverError::SolverError;
};

class StepRejected : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Fatal: the step size fell below dt_min. The message carries a state dump.
class StepTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xdiff
