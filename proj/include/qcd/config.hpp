#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcd/detectors.hpp"
#include "qcd/distributions.hpp"
#include "qcd/simulation.hpp"

namespace qcd {

// Family block of an experiment config. Gaussian families only: members are
// N(theta, 1) against a N(0, 1) pre-change density, either a finite theta
// list or a natural-parameter interval. The control density may be
// overridden with any N(mean, 1).
struct FamilyConfig {
  enum class Type { kGaussianFinite, kGaussianExpfam };
  Type type = Type::kGaussianFinite;
  std::vector<double> thetas;  // finite
  double theta_lower = 0.0;    // expfam
  double theta_upper = 0.0;    // expfam
  double epsilon = 0.0;        // expfam GLR exclusion radius
  double theta_star = 0.0;
  std::optional<double> control_mean;
  bool operator==(const FamilyConfig&) const = default;
};

struct ExperimentConfig {
  FamilyConfig family;
  double theta_true = 0.0;
  std::vector<DetectorSpec> detectors;
  std::vector<double> thresholds;
  std::uint64_t trials = 20000;       // FAR trials
  std::uint64_t cadd_trials = 4000;   // per gamma
  std::uint64_t pdc_cycles = 100000;  // renewal cycles
  std::uint64_t horizon = 100000;
  std::vector<std::uint64_t> gamma_grid = {1, 5, 25, 100, 400};
  std::uint64_t seed = 0;
  std::string output = "curve.csv";
  bool operator==(const ExperimentConfig&) const = default;
};

// Parses and validates a JSON config document. Throws ConfigError with a
// field diagnostic on malformed input, unknown keys, or violated invariants
// (theta values outside the family, non-increasing thresholds, ...).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON serialization; parse(serialize(config)) == config.
std::string serialize_config(const ExperimentConfig& config);

FamilySpec build_family(const FamilyConfig& family);
TradeoffSettings settings_from(const ExperimentConfig& config);

}  // namespace qcd
