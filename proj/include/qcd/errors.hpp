#pragma once

#include <stdexcept>
#include <string>

namespace qcd {

// Caller broke an API contract (e.g. supplied an observation while the
// detector was skipping). These indicate bugs, not data problems.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A density or statistic evaluated to a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

// A Monte Carlo estimator could not produce a usable estimate
// (all trials censored, too few surviving paths, runaway cycle, ...).
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or semantically invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qcd
