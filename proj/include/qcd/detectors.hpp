#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcd/distributions.hpp"

namespace qcd {

// One time step of any detector: whether the step consumed an observation,
// the current detection statistic, and whether the stopping rule fired.
struct StepOutcome {
  bool requested_sample = false;
  double statistic = 0.0;
  bool stopped = false;
};

enum class DetectorKind { kCusum, kDecusum, kGcusum, kGdecusum, kFractional };

std::string_view detector_kind_name(DetectorKind kind);

// Deterministic period-2 pattern (keeps odd steps) or an independent coin
// with the given keep probability, drawn from the detector's own stream.
struct SkipPattern {
  enum class Kind { kPeriod2, kBernoulli };
  Kind kind = Kind::kPeriod2;
  double keep_probability = 0.5;
  bool operator==(const SkipPattern&) const = default;
};

struct DetectorParams {
  double threshold_a = 0.0;
  double mu = 0.0;  // skip ramp rate, > 0 for data-efficient detectors
  double h = 0.0;   // undershoot truncation depth; +infinity for unbounded
  std::optional<std::uint32_t> window;  // GLR history cap (expfam GCuSum)
  std::optional<SkipPattern> skip_pattern;  // fractional sampling only
  // Target member for CuSum/DECuSum; defaults to the family's theta*.
  std::optional<double> design_theta;
  bool operator==(const DetectorParams&) const = default;
};

struct DetectorSpec {
  DetectorKind kind = DetectorKind::kCusum;
  DetectorParams params;
  std::string name;  // report/CSV label; defaults to the kind name
  bool operator==(const DetectorSpec&) const = default;
};

// Longest possible run of consecutive skipped steps, ceil(h/mu).
// Returns UINT64_MAX when h is infinite.
std::uint64_t max_skip_run(const DetectorParams& params);

// ---------------------------------------------------------------------------
// Value-level statistic recursions. The common observation-control contract:
// the caller first checks whether the state is in sampling mode; if so the
// next observation's LLR is supplied, otherwise the step runs without one.
// ---------------------------------------------------------------------------

struct CusumState {
  double c = 0.0;  // >= 0 always
};
StepOutcome cusum_step(CusumState& state, double llr_value, double threshold_a);

struct DecusumState {
  double w = 0.0;  // >= -h always; skipping mode iff w < 0
};
inline bool decusum_wants_sample(const DecusumState& state) {
  return state.w >= 0.0;
}
StepOutcome decusum_step(DecusumState& state, const DetectorParams& params,
                         std::optional<double> llr_value);

struct GcusumFiniteState {
  std::vector<double> stats;  // per-member CuSum statistics, all >= 0
};
StepOutcome gcusum_step_finite(GcusumFiniteState& state,
                               std::span<const double> llr_values,
                               const DetectorParams& params);

// GLR start-hypotheses (partial sum of observations, observation count),
// oldest first; counts held as doubles for the kernels, always integral.
struct GcusumExpfamState {
  std::vector<double> sums;
  std::vector<double> counts;
  double statistic = 0.0;
};
StepOutcome gcusum_step_expfam(GcusumExpfamState& state, double x,
                               const ExponentialFamilySpec& fam,
                               const DetectorParams& params);

// ---------------------------------------------------------------------------
// Streaming detectors behind one step interface.
//
// Contract: callers ask wants_sample() first; when it returns true the next
// observation must be passed to step(), otherwise step() is called without
// one. This keeps skip decisions causal -- they never see a skipped value.
// ---------------------------------------------------------------------------
class Detector {
 public:
  virtual ~Detector() = default;

  virtual bool wants_sample() const = 0;
  virtual StepOutcome step(std::optional<double> x) = 0;
  virtual double statistic() const = 0;
  // Returns the detector to its initial state. noise_seed feeds detectors
  // with internal randomness (Bernoulli fractional sampling); others ignore it.
  virtual void reset(std::uint64_t noise_seed) = 0;
  virtual std::unique_ptr<Detector> clone() const = 0;
  // True for detectors whose skipping is driven by the data (DECuSum family).
  virtual bool uses_observation_control() const { return false; }

  const DetectorSpec& spec() const { return spec_; }
  double threshold() const { return spec_.params.threshold_a; }

 protected:
  explicit Detector(DetectorSpec spec) : spec_(std::move(spec)) {}

  DetectorSpec spec_;
};

// Builds a detector bound to a family. Validates the spec: A > 0 for the
// GLR-based detectors, mu > 0 and h >= 0 for data-efficient ones, a skip
// pattern for fractional sampling.
std::unique_ptr<Detector> make_detector(const DetectorSpec& spec,
                                        const FamilySpec& family);

}  // namespace qcd
