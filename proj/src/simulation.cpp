#include "qcd/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "qcd/errors.hpp"

namespace qcd {

namespace {

constexpr double kZ95 = 1.959963984540054;

// Fixed purpose tags: every estimator derives its own stream space from the
// master seed, independent of detector identity and threshold, so repeated
// calls share observation paths (common random numbers).
constexpr std::uint64_t kFarTag = 0x464152;
constexpr std::uint64_t kCaddTag = 0xCADD;
constexpr std::uint64_t kPdcTag = 0x9DC0;
constexpr std::uint64_t kPdcLongTag = 0x9DC1;
constexpr std::uint64_t kQDriftTag = 0x7100;
constexpr std::uint64_t kQWalkTag = 0x7101;
constexpr std::uint64_t kProbeTag = 0x9B0BE;

constexpr std::uint64_t kQTrialsDefault = 2000;
constexpr std::uint64_t kQHorizonDefault = 10000;
constexpr std::uint64_t kCycleCap = 10000000;

unsigned resolve_threads(const RunOptions& options, std::uint64_t n_items) {
  unsigned threads =
      options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, threads);
  if (n_items < threads) threads = static_cast<unsigned>(std::max<std::uint64_t>(1, n_items));
  return threads;
}

// Runs body(i) for i in [0, n) across a worker pool. Bodies write to
// per-index slots; aggregation happens afterwards in index order, so results
// do not depend on the thread count.
template <typename Body>
void parallel_for(std::uint64_t n, unsigned threads, const Body& body) {
  if (threads <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const std::uint64_t chunk = 16;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const std::uint64_t end = std::min(begin + chunk, n);
      try {
        for (std::uint64_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Sampler {
  const Density* density;
  double mean = 0.0;
  bool gaussian = false;

  explicit Sampler(const Density& d) : density(&d) {
    if (const auto m = d.as_gaussian_mean()) {
      mean = *m;
      gaussian = true;
    }
  }

  double draw(RngStream& rng) const {
    return gaussian ? mean + rng.gaussian() : density->sample(rng);
  }
};

// Cached control-vs-pre LLR used by the renewal and q_theta walks.
struct ControlLlr {
  double slope = 0.0;
  double intercept = 0.0;
  bool affine = false;
  const Density* num;
  const Density* den;

  ControlLlr(const Density& control, const Density& pre)
      : num(&control), den(&pre) {
    if (const auto coeffs = affine_llr_coeffs(control, pre)) {
      slope = coeffs->slope;
      intercept = coeffs->intercept;
      affine = true;
    }
  }

  double operator()(double x) const {
    return affine ? slope * x + intercept : llr(*num, *den, x);
  }
};

TrialResult run_path(const FamilySpec& family, const Detector& prototype,
                     const Density* post_density, std::uint64_t gamma,
                     std::uint64_t horizon, std::uint64_t purpose_seed,
                     std::uint64_t trial_index) {
  auto detector = prototype.clone();
  detector->reset(derive_seed(purpose_seed, 2 * trial_index + 1));
  RngStream observations(purpose_seed, 2 * trial_index);
  const Sampler pre(family.pre());
  std::optional<Sampler> post;
  if (post_density) post.emplace(*post_density);

  TrialResult result;
  result.tau = horizon;
  result.censored = true;
  std::uint64_t pre_samples = 0;
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    const bool wants = detector->wants_sample();
    const bool post_regime = gamma != kNoChange && n >= gamma;
    // One draw per time step regardless of the skip decision keeps paths
    // aligned across detectors and thresholds sharing a stream.
    const double x = (post_regime ? *post : pre).draw(observations);
    const StepOutcome out =
        detector->step(wants ? std::optional<double>(x) : std::nullopt);
    if (out.stopped) {
      result.tau = n;
      result.censored = false;
      break;
    }
    if (wants && n < gamma && n < horizon) ++pre_samples;
  }
  result.pre_change_samples_used = pre_samples;
  result.steps_before_change = std::min(gamma, result.tau) - 1;
  return result;
}

struct FreeRunOutcome {
  std::uint64_t samples = 0;
  // Maximal runs of skipped steps as (first skipped step, length).
  std::vector<std::pair<std::uint64_t, std::uint64_t>> skip_runs;
};

FreeRunOutcome free_run(const FamilySpec& family, const Detector& prototype,
                        std::uint64_t horizon, std::uint64_t purpose_seed,
                        std::uint64_t trial_index, bool collect_runs) {
  auto detector = prototype.clone();
  detector->reset(derive_seed(purpose_seed, 2 * trial_index + 1));
  RngStream observations(purpose_seed, 2 * trial_index);
  const Sampler pre(family.pre());

  FreeRunOutcome outcome;
  std::uint64_t run_start = 0;
  std::uint64_t run_length = 0;
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    const bool wants = detector->wants_sample();
    const double x = pre.draw(observations);
    detector->step(wants ? std::optional<double>(x) : std::nullopt);
    if (wants) {
      outcome.samples += 1;
      if (collect_runs && run_length > 0) {
        outcome.skip_runs.emplace_back(run_start, run_length);
        run_length = 0;
      }
    } else if (collect_runs) {
      if (run_length == 0) run_start = n;
      ++run_length;
    }
  }
  if (collect_runs && run_length > 0) {
    outcome.skip_runs.emplace_back(run_start, run_length);
  }
  return outcome;
}

Estimate mean_estimate(double sum, double sum_sq, std::uint64_t n) {
  const double dn = static_cast<double>(n);
  const double mean = sum / dn;
  const double var = std::max(0.0, sum_sq / dn - mean * mean);
  return {mean, std::sqrt(var / dn)};
}

}  // namespace

std::string_view pdc_method_name(PdcMethod method) {
  switch (method) {
    case PdcMethod::kRenewalReward: return "renewal-reward";
    case PdcMethod::kLongRunFraction: return "long-run";
    case PdcMethod::kExact: return "exact";
  }
  return "unknown";
}

TrialResult run_trial(const TrialConfig& cfg) {
  if (cfg.horizon < 1) throw ContractViolation("run_trial: horizon must be >= 1");
  if (cfg.gamma < 1) throw ContractViolation("run_trial: gamma must be >= 1");
  std::optional<Density> post;
  if (cfg.gamma != kNoChange) {
    if (!cfg.theta_true) {
      throw ContractViolation("run_trial: theta_true required for a finite gamma");
    }
    post = cfg.family.member_for_theta(*cfg.theta_true);
  }
  const auto detector = make_detector(cfg.detector, cfg.family);
  return run_path(cfg.family, *detector, post ? &*post : nullptr, cfg.gamma,
                  cfg.horizon, cfg.seed, 0);
}

FarResult estimate_far(const FamilySpec& family, const DetectorSpec& detector,
                       std::uint64_t n_trials, std::uint64_t horizon,
                       std::uint64_t seed, const RunOptions& options) {
  if (n_trials < 100) {
    throw EstimationError("estimate_far requires n_trials >= 100");
  }
  const auto prototype = make_detector(detector, family);
  const std::uint64_t purpose = derive_seed(seed, kFarTag);
  std::vector<std::uint32_t> censored(n_trials);
  std::vector<double> taus(n_trials);
  parallel_for(n_trials, resolve_threads(options, n_trials), [&](std::uint64_t i) {
    const TrialResult r =
        run_path(family, *prototype, nullptr, kNoChange, horizon, purpose, i);
    taus[i] = static_cast<double>(r.tau);
    censored[i] = r.censored ? 1 : 0;
  });

  double sum = 0.0, sum_sq = 0.0;
  std::uint64_t n_censored = 0;
  for (std::uint64_t i = 0; i < n_trials; ++i) {
    sum += taus[i];
    sum_sq += taus[i] * taus[i];
    n_censored += censored[i];
  }
  if (n_censored == n_trials) {
    throw EstimationError(
        "estimate_far: all trials censored at the horizon; the threshold is "
        "effectively unreachable");
  }

  FarResult result;
  result.trials = n_trials;
  result.mean_tau = mean_estimate(sum, sum_sq, n_trials);
  result.censoring_rate =
      static_cast<double>(n_censored) / static_cast<double>(n_trials);
  result.conservative = result.censoring_rate > 0.01;
  const double mean = result.mean_tau.value;
  const double se = result.mean_tau.std_error;
  result.far = {1.0 / mean, se / (mean * mean)};
  result.far_ci.lo = 1.0 / (mean + kZ95 * se);
  result.far_ci.hi = mean > kZ95 * se
                         ? 1.0 / (mean - kZ95 * se)
                         : std::numeric_limits<double>::infinity();
  return result;
}

CaddResult estimate_cadd(const FamilySpec& family, const DetectorSpec& detector,
                         double theta_true,
                         std::span<const std::uint64_t> gamma_grid,
                         std::uint64_t n_trials_per_gamma,
                         std::uint64_t horizon, std::uint64_t seed,
                         const RunOptions& options) {
  if (gamma_grid.empty()) {
    throw EstimationError("estimate_cadd requires a non-empty gamma grid");
  }
  if (n_trials_per_gamma < 100) {
    throw EstimationError("estimate_cadd requires n_trials >= 100 per gamma");
  }
  for (const std::uint64_t g : gamma_grid) {
    if (g < 1 || g == kNoChange || g > horizon) {
      throw EstimationError("estimate_cadd: gamma grid entries must lie in [1, horizon]");
    }
  }
  const auto prototype = make_detector(detector, family);
  const Density post = family.member_for_theta(theta_true);
  const std::uint64_t cadd_space = derive_seed(seed, kCaddTag);

  CaddResult result;
  result.trials_per_gamma = n_trials_per_gamma;
  for (const std::uint64_t gamma : gamma_grid) {
    const std::uint64_t purpose = derive_seed(cadd_space, gamma);
    std::vector<TrialResult> trials(n_trials_per_gamma);
    parallel_for(n_trials_per_gamma, resolve_threads(options, n_trials_per_gamma),
                 [&](std::uint64_t i) {
                   trials[i] = run_path(family, *prototype, &post, gamma,
                                        horizon, purpose, i);
                 });
    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t survivors = 0, censored = 0;
    for (const TrialResult& r : trials) {
      if (r.tau < gamma) continue;  // false alarm before the change
      const double delay = static_cast<double>(r.tau - gamma);
      sum += delay;
      sum_sq += delay * delay;
      ++survivors;
      if (r.censored) ++censored;
    }
    if (survivors < 10) {
      throw EstimationError("estimate_cadd: fewer than 10 paths survived to gamma=" +
                            std::to_string(gamma));
    }
    CaddPoint point;
    point.gamma = gamma;
    point.delay = mean_estimate(sum, sum_sq, survivors);
    point.survivors = survivors;
    point.censored_fraction =
        static_cast<double>(censored) / static_cast<double>(survivors);
    result.curve.push_back(point);
  }

  const auto max_it = std::max_element(
      result.curve.begin(), result.curve.end(),
      [](const CaddPoint& a, const CaddPoint& b) {
        return a.delay.value < b.delay.value;
      });
  result.max_delay = max_it->delay;
  result.argmax_gamma = max_it->gamma;
  for (const CaddPoint& p : result.curve) {
    if (p.gamma == 1) result.gamma1 = p.delay;
  }
  return result;
}

PdcResult estimate_pdc_renewal(const Density& pre, const Density& control,
                               double mu, double h, std::uint64_t n_cycles,
                               std::uint64_t seed, const RunOptions& options) {
  if (n_cycles < 100) {
    throw EstimationError("estimate_pdc_renewal requires n_cycles >= 100");
  }
  if (!(mu > 0.0)) {
    throw EstimationError("estimate_pdc_renewal requires mu > 0");
  }
  if (!(h >= 0.0)) {
    throw EstimationError("estimate_pdc_renewal requires h >= 0");
  }
  const ControlLlr walk_llr(control, pre);
  const Sampler pre_sampler(pre);
  const std::uint64_t purpose = derive_seed(seed, kPdcTag);
  std::vector<double> on_times(n_cycles);
  std::vector<double> off_times(n_cycles);
  parallel_for(n_cycles, resolve_threads(options, n_cycles), [&](std::uint64_t i) {
    RngStream rng(purpose, i);
    double s = 0.0;
    std::uint64_t n = 0;
    while (true) {
      ++n;
      s += walk_llr(pre_sampler.draw(rng));
      if (s < 0.0) break;
      if (n >= kCycleCap) {
        throw EstimationError(
            "estimate_pdc_renewal: ladder cycle exceeded 1e7 steps; the "
            "control-LLR drift under f0 is likely non-negative (misconfigured "
            "family)");
      }
    }
    const double height = -s;
    const double truncated = std::min(height, h);
    on_times[i] = static_cast<double>(n);
    off_times[i] = std::ceil(truncated / mu);
  });

  double sum_on = 0.0, sum_on_sq = 0.0;
  double sum_off = 0.0, sum_off_sq = 0.0;
  double sum_cross = 0.0;
  for (std::uint64_t i = 0; i < n_cycles; ++i) {
    sum_on += on_times[i];
    sum_on_sq += on_times[i] * on_times[i];
    sum_off += off_times[i];
    sum_off_sq += off_times[i] * off_times[i];
    sum_cross += on_times[i] * off_times[i];
  }
  const double n = static_cast<double>(n_cycles);
  const double mean_on = sum_on / n;
  const double mean_off = sum_off / n;
  const double var_on = std::max(0.0, sum_on_sq / n - mean_on * mean_on);
  const double var_off = std::max(0.0, sum_off_sq / n - mean_off * mean_off);
  const double cov = sum_cross / n - mean_on * mean_off;

  PdcResult result;
  result.method = PdcMethod::kRenewalReward;
  result.samples = n_cycles;
  result.mean_on = {mean_on, std::sqrt(var_on / n)};
  result.mean_off = {mean_off, std::sqrt(var_off / n)};
  const double total = mean_on + mean_off;
  const double value = mean_on / total;
  // Delta method for f(a, b) = a / (a + b) with the full cycle covariance.
  const double ga = mean_off / (total * total);
  const double gb = -mean_on / (total * total);
  const double var =
      std::max(0.0, ga * ga * var_on + 2.0 * ga * gb * cov + gb * gb * var_off) /
      n;
  const double se = std::sqrt(var);
  result.pdc = {value, se};
  result.ci = {std::max(0.0, value - kZ95 * se), std::min(1.0, value + kZ95 * se)};
  return result;
}

PdcResult estimate_pdc_longrun(const FamilySpec& family,
                               const DetectorSpec& detector,
                               std::uint64_t horizon, std::uint64_t n_trials,
                               std::uint64_t seed, const RunOptions& options) {
  if (horizon < 1) {
    throw EstimationError("estimate_pdc_longrun requires horizon >= 1");
  }
  if (n_trials < 1) {
    throw EstimationError("estimate_pdc_longrun requires n_trials >= 1");
  }
  const auto prototype = make_detector(detector, family);
  const std::uint64_t purpose = derive_seed(seed, kPdcLongTag);
  std::vector<double> fractions(n_trials);
  parallel_for(n_trials, resolve_threads(options, n_trials), [&](std::uint64_t i) {
    const FreeRunOutcome out =
        free_run(family, *prototype, horizon, purpose, i, false);
    fractions[i] =
        static_cast<double>(out.samples) / static_cast<double>(horizon);
  });
  double sum = 0.0, sum_sq = 0.0;
  for (const double f : fractions) {
    sum += f;
    sum_sq += f * f;
  }
  PdcResult result;
  result.method = PdcMethod::kLongRunFraction;
  result.samples = n_trials;
  result.pdc = mean_estimate(sum, sum_sq, n_trials);
  result.ci = {std::max(0.0, result.pdc.value - kZ95 * result.pdc.std_error),
               std::min(1.0, result.pdc.value + kZ95 * result.pdc.std_error)};
  return result;
}

double pdc_upper_bound(double mu, double kl_pre_vs_control) {
  if (!(mu > 0.0) || !(kl_pre_vs_control > 0.0)) {
    throw EvaluationError("pdc_upper_bound requires mu > 0 and KL > 0");
  }
  return mu / (mu + kl_pre_vs_control);
}

QThetaResult estimate_q_theta(const FamilySpec& family, double theta_true,
                              std::uint64_t n_trials, std::uint64_t horizon,
                              std::uint64_t seed, const RunOptions& options) {
  if (n_trials < 100) {
    throw EstimationError("estimate_q_theta requires n_trials >= 100");
  }
  if (horizon < 1) {
    throw EstimationError("estimate_q_theta requires horizon >= 1");
  }
  const Density member = family.member_for_theta(theta_true);
  const ControlLlr walk_llr(family.control(), family.pre());
  const Sampler member_sampler(member);

  // Assumption 1 gate: the control-LLR drift under theta_true must not be
  // strictly negative. Zero drift is allowed (the walk is recurrent and the
  // estimate tends to zero with the horizon).
  const auto member_mean = member.as_gaussian_mean();
  if (walk_llr.affine && member_mean) {
    const double drift = walk_llr.slope * *member_mean + walk_llr.intercept;
    if (drift < 0.0) {
      throw EstimationError(
          "estimate_q_theta: Assumption 1 violated, control drift " +
          std::to_string(drift) + " < 0 under theta=" + std::to_string(theta_true));
    }
  } else {
    RngStream rng(derive_seed(seed, kQDriftTag), 0);
    double sum = 0.0, sum_sq = 0.0;
    const std::uint64_t probes = 10000;
    for (std::uint64_t i = 0; i < probes; ++i) {
      const double z = walk_llr(member_sampler.draw(rng));
      sum += z;
      sum_sq += z * z;
    }
    const Estimate drift = mean_estimate(sum, sum_sq, probes);
    if (drift.value < -3.0 * drift.std_error) {
      throw EstimationError(
          "estimate_q_theta: Assumption 1 violated, estimated control drift " +
          std::to_string(drift.value) + " < 0 under theta=" +
          std::to_string(theta_true));
    }
  }

  const std::uint64_t purpose = derive_seed(seed, kQWalkTag);
  std::vector<std::uint32_t> survived(n_trials);
  parallel_for(n_trials, resolve_threads(options, n_trials), [&](std::uint64_t i) {
    RngStream rng(purpose, i);
    double s = 0.0;
    bool ok = true;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      s += walk_llr(member_sampler.draw(rng));
      if (s < 0.0) {
        ok = false;
        break;
      }
    }
    survived[i] = ok ? 1 : 0;
  });
  std::uint64_t successes = 0;
  for (const auto s : survived) successes += s;
  const double q = static_cast<double>(successes) / static_cast<double>(n_trials);
  const double se = std::sqrt(std::max(0.0, q * (1.0 - q)) /
                              static_cast<double>(n_trials));
  return {{q, se}, horizon};
}

double lower_bound(double alpha, double kl_divergence) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw EvaluationError("lower_bound requires alpha in (0, 1)");
  }
  if (!(kl_divergence > 0.0)) {
    throw EvaluationError("lower_bound requires a positive KL divergence");
  }
  return -std::log(alpha) / kl_divergence;
}

std::uint64_t far_horizon_for_threshold(double a) {
  const double suggested = 20.0 * std::exp(a);
  if (suggested > 9e18) return std::numeric_limits<std::uint64_t>::max();
  return std::max<std::uint64_t>(100000,
                                 static_cast<std::uint64_t>(std::ceil(suggested)));
}

std::vector<std::uint64_t> augment_gamma_grid(
    const FamilySpec& family, const DetectorSpec& detector,
    std::span<const std::uint64_t> base_grid, std::uint64_t probe_horizon,
    std::uint64_t seed) {
  std::vector<std::uint64_t> grid(base_grid.begin(), base_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto prototype = make_detector(detector, family);
  if (!prototype->uses_observation_control() || probe_horizon < 1) return grid;

  FreeRunOutcome probe = free_run(family, *prototype, probe_horizon,
                                  derive_seed(seed, kProbeTag), 0, true);
  // Only probe within the configured gamma range: later change points would
  // condition on ever-rarer survival without adding coverage.
  const std::uint64_t cap = grid.empty() ? probe_horizon : grid.back();
  std::erase_if(probe.skip_runs,
                [cap](const auto& run) { return run.first > cap; });
  std::sort(probe.skip_runs.begin(), probe.skip_runs.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  const std::size_t extras = std::min<std::size_t>(3, probe.skip_runs.size());
  for (std::size_t i = 0; i < extras; ++i) {
    grid.push_back(probe.skip_runs[i].first);  // change lands inside the run
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

PdcResult exact_pdc(double value) {
  PdcResult result;
  result.method = PdcMethod::kExact;
  result.pdc = {value, 0.0};
  result.ci = {value, value};
  return result;
}

}  // namespace

std::vector<MetricsReport> tradeoff_curve(
    const FamilySpec& family, std::span<const DetectorSpec> detectors,
    std::span<const double> thresholds, double theta_true,
    const TradeoffSettings& settings, std::uint64_t seed,
    const RunOptions& options) {
  if (detectors.empty()) {
    throw ConfigError("tradeoff_curve requires at least one detector");
  }
  if (thresholds.empty()) {
    throw ConfigError("tradeoff_curve requires at least one threshold");
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) {
      throw ConfigError("tradeoff_curve thresholds must be strictly increasing");
    }
  }

  std::vector<MetricsReport> rows;
  rows.reserve(detectors.size() * thresholds.size());
  for (const double a : thresholds) {
    for (const DetectorSpec& base_spec : detectors) {
      DetectorSpec spec = base_spec;
      spec.params.threshold_a = a;

      MetricsReport row;
      row.detector = spec.name.empty()
                         ? std::string(detector_kind_name(spec.kind))
                         : spec.name;
      row.theta_true = theta_true;
      row.threshold_a = a;
      row.seed = seed;

      row.far = estimate_far(family, spec, settings.far_trials,
                             far_horizon_for_threshold(a), seed, options);

      std::uint64_t max_gamma = 1;
      for (const std::uint64_t g : settings.gamma_grid) max_gamma = std::max(max_gamma, g);
      const std::uint64_t probe =
          std::min<std::uint64_t>(std::max<std::uint64_t>(2000, 2 * max_gamma),
                                  settings.horizon);
      const auto grid =
          augment_gamma_grid(family, spec, settings.gamma_grid, probe, seed);
      row.cadd = estimate_cadd(family, spec, theta_true, grid,
                               settings.cadd_trials, settings.horizon, seed,
                               options);

      switch (spec.kind) {
        case DetectorKind::kCusum:
        case DetectorKind::kGcusum:
          row.pdc = exact_pdc(1.0);
          break;
        case DetectorKind::kFractional:
          row.pdc = exact_pdc(
              spec.params.skip_pattern->kind == SkipPattern::Kind::kPeriod2
                  ? 0.5
                  : spec.params.skip_pattern->keep_probability);
          break;
        case DetectorKind::kDecusum: {
          const Density driver =
              spec.params.design_theta
                  ? family.member_for_theta(*spec.params.design_theta)
                  : family.control();
          row.pdc = estimate_pdc_renewal(family.pre(), driver, spec.params.mu,
                                         spec.params.h, settings.pdc_cycles,
                                         seed, options);
          break;
        }
        case DetectorKind::kGdecusum:
          row.pdc = estimate_pdc_renewal(family.pre(), family.control(),
                                         spec.params.mu, spec.params.h,
                                         settings.pdc_cycles, seed, options);
          break;
      }

      if (spec.kind == DetectorKind::kGdecusum && std::isfinite(spec.params.h)) {
        const QThetaResult q = estimate_q_theta(
            family, theta_true, kQTrialsDefault, kQHorizonDefault, seed, options);
        if (q.q.value > 0.0) {
          const double runs = std::ceil(spec.params.h / spec.params.mu);
          row.wadd_gap_bound = (1.0 / q.q.value + 1.0) * runs + 1.0;
        }
      }

      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace qcd
