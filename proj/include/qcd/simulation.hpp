#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qcd/detectors.hpp"
#include "qcd/distributions.hpp"

namespace qcd {

// Sentinel change point for "the change never occurs" (P_infinity).
inline constexpr std::uint64_t kNoChange =
    std::numeric_limits<std::uint64_t>::max();

struct RunOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct TrialConfig {
  explicit TrialConfig(FamilySpec family_spec)
      : family(std::move(family_spec)) {}

  FamilySpec family;
  DetectorSpec detector;
  std::uint64_t gamma = 1;  // change point >= 1, or kNoChange
  std::optional<double> theta_true;  // post-change member; ignored if kNoChange
  std::uint64_t horizon = 100000;  // censoring cap
  std::uint64_t seed = 0;
};

struct TrialResult {
  std::uint64_t tau = 0;  // stopping time, = horizon when censored
  bool censored = false;
  std::uint64_t pre_change_samples_used = 0;  // sum of S_n for n < min(gamma, tau)
  std::uint64_t steps_before_change = 0;      // min(gamma, tau) - 1
};

// One sample path of the change-point model: X_n ~ f0 for n < gamma and
// ~ f_theta for n >= gamma, driven through the detector under the
// observation-control contract. Deterministic given the seed. One
// observation is drawn from the stream at every time step whether or not
// the detector requests it, so paths are comparable across detectors and
// thresholds sharing a seed.
TrialResult run_trial(const TrialConfig& cfg);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct FarResult {
  Estimate far;      // 1 / mean stopping time
  Interval far_ci;   // 95% delta-method interval
  Estimate mean_tau; // censored trials contribute the horizon
  double censoring_rate = 0.0;
  // Censoring above 1% makes mean_tau a lower-confidence bound on
  // E_inf[tau], hence far an upper bound on the true rate.
  bool conservative = false;
  std::uint64_t trials = 0;
};

// FAR = 1/E_inf[tau], estimated from n_trials no-change runs capped at the
// given horizon. Throws EstimationError if every trial is censored.
FarResult estimate_far(const FamilySpec& family, const DetectorSpec& detector,
                       std::uint64_t n_trials, std::uint64_t horizon,
                       std::uint64_t seed, const RunOptions& options = {});

struct CaddPoint {
  std::uint64_t gamma = 1;
  Estimate delay;  // E[tau - gamma | tau >= gamma]
  std::uint64_t survivors = 0;
  double censored_fraction = 0.0;
};

struct CaddResult {
  std::vector<CaddPoint> curve;
  Estimate max_delay;  // CADD estimate: worst point on the gamma grid
  std::uint64_t argmax_gamma = 1;
  std::optional<Estimate> gamma1;  // reported when the grid contains gamma=1
  std::uint64_t trials_per_gamma = 0;
};

// Conditional average detection delay across a gamma grid. Trials whose
// stopping time is censored but past gamma enter with delay horizon-gamma
// (reported via censored_fraction). Throws EstimationError when fewer than
// 10 paths survive to some gamma.
CaddResult estimate_cadd(const FamilySpec& family, const DetectorSpec& detector,
                         double theta_true,
                         std::span<const std::uint64_t> gamma_grid,
                         std::uint64_t n_trials_per_gamma,
                         std::uint64_t horizon, std::uint64_t seed,
                         const RunOptions& options = {});

enum class PdcMethod { kRenewalReward, kLongRunFraction, kExact };
std::string_view pdc_method_name(PdcMethod method);

struct PdcResult {
  Estimate pdc;
  Interval ci;  // 95% delta-method interval
  PdcMethod method = PdcMethod::kExact;
  Estimate mean_on;   // renewal: E[ladder epoch tau_-]
  Estimate mean_off;  // renewal: E[ceil(|truncated ladder height| / mu)]
  std::uint64_t samples = 0;  // cycles or trials
};

// Renewal-reward PDC estimator: i.i.d. cycles under f0 of the control-LLR
// random walk; cycle on-time is the ladder epoch, off-time the ramp-back
// ceil(|W^{h+}|/mu). Throws EstimationError if a cycle exceeds 10^7 steps
// (control drift under f0 is likely non-negative, i.e. a misconfigured
// family).
PdcResult estimate_pdc_renewal(const Density& pre, const Density& control,
                               double mu, double h, std::uint64_t n_cycles,
                               std::uint64_t seed,
                               const RunOptions& options = {});

// Long-run fraction estimator: free-runs the detector under f0 (stopping
// disabled; the skip process does not depend on the threshold) and averages
// samples-used / horizon across trials.
PdcResult estimate_pdc_longrun(const FamilySpec& family,
                               const DetectorSpec& detector,
                               std::uint64_t horizon, std::uint64_t n_trials,
                               std::uint64_t seed,
                               const RunOptions& options = {});

// Wald bound on the h=infinity PDC: mu / (mu + D(f0 || control)).
double pdc_upper_bound(double mu, double kl_pre_vs_control);

struct QThetaResult {
  Estimate q;  // P(control-LLR walk stays >= 0 up to the horizon) under theta
  std::uint64_t horizon = 0;  // truncation horizon; the estimate is upper-biased
};

// Survival probability of the control-LLR random walk under post-change
// member theta_true. Throws EstimationError when the drift is strictly
// negative (Assumption 1 violated for that member).
QThetaResult estimate_q_theta(const FamilySpec& family, double theta_true,
                              std::uint64_t n_trials, std::uint64_t horizon,
                              std::uint64_t seed,
                              const RunOptions& options = {});

// Universal first-order delay lower bound |log alpha| / kl.
double lower_bound(double alpha, double kl_divergence);

// FAR-run censoring cap: max(10^5, ceil(20 * exp(a))).
std::uint64_t far_horizon_for_threshold(double a);

// Adds change points just after the starts of the longest skip runs
// observed on one free-running no-change path, probing unfavorable starts
// for observation-controlled detectors. Other detectors get the base grid
// back (sorted, deduplicated).
std::vector<std::uint64_t> augment_gamma_grid(
    const FamilySpec& family, const DetectorSpec& detector,
    std::span<const std::uint64_t> base_grid, std::uint64_t probe_horizon,
    std::uint64_t seed);

struct MetricsReport {
  std::string detector;
  double theta_true = 0.0;
  double threshold_a = 0.0;
  FarResult far;
  CaddResult cadd;
  PdcResult pdc;
  // Analytic delay-gap bound (1/q + 1) * ceil(h/mu) + 1 relating the
  // GDECuSum delay to the GCuSum delay, for finite-h runs.
  std::optional<double> wadd_gap_bound;
  std::uint64_t seed = 0;
};

struct TradeoffSettings {
  std::uint64_t far_trials = 20000;
  std::uint64_t cadd_trials = 4000;
  std::uint64_t pdc_cycles = 100000;
  std::uint64_t pdc_longrun_trials = 200;
  std::uint64_t horizon = 100000;  // CADD / long-run horizon
  std::vector<std::uint64_t> gamma_grid = {1, 5, 25, 100, 400};
};

// Full delay / false-alarm / duty-cycle sweep. Rows are emitted threshold-
// major in the given order, detectors in config order within a threshold.
// All sub-estimators derive their streams from the master seed alone, so
// results are deterministic and shared across detectors and thresholds
// (common random numbers).
std::vector<MetricsReport> tradeoff_curve(
    const FamilySpec& family, std::span<const DetectorSpec> detectors,
    std::span<const double> thresholds, double theta_true,
    const TradeoffSettings& settings, std::uint64_t seed,
    const RunOptions& options = {});

}  // namespace qcd
