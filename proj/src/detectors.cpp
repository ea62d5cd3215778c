#include "qcd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcd/errors.hpp"
#include "qcd/kernels.hpp"

namespace qcd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite_llr(double llr_value) {
  if (!std::isfinite(llr_value)) {
    throw EvaluationError("non-finite log-likelihood ratio increment");
  }
}

}  // namespace

std::string_view detector_kind_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kCusum: return "cusum";
    case DetectorKind::kDecusum: return "decusum";
    case DetectorKind::kGcusum: return "gcusum";
    case DetectorKind::kGdecusum: return "gdecusum";
    case DetectorKind::kFractional: return "fractional";
  }
  return "unknown";
}

std::uint64_t max_skip_run(const DetectorParams& params) {
  if (std::isinf(params.h)) return std::numeric_limits<std::uint64_t>::max();
  if (params.h <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::ceil(params.h / params.mu));
}

StepOutcome cusum_step(CusumState& state, double llr_value,
                       double threshold_a) {
  require_finite_llr(llr_value);
  state.c = std::max(0.0, state.c + llr_value);
  return {true, state.c, state.c >= threshold_a};
}

StepOutcome decusum_step(DecusumState& state, const DetectorParams& params,
                         std::optional<double> llr_value) {
  const bool sampling = decusum_wants_sample(state);
  if (sampling != llr_value.has_value()) {
    throw ContractViolation(
        sampling ? "decusum_step: observation LLR missing while sampling"
                 : "decusum_step: observation LLR supplied while skipping");
  }
  if (sampling) {
    require_finite_llr(*llr_value);
    state.w = std::max(-params.h, state.w + *llr_value);
  } else {
    state.w = std::min(0.0, state.w + params.mu);
  }
  return {sampling, state.w, state.w >= params.threshold_a};
}

StepOutcome gcusum_step_finite(GcusumFiniteState& state,
                               std::span<const double> llr_values,
                               const DetectorParams& params) {
  if (llr_values.size() != state.stats.size()) {
    throw ContractViolation("gcusum_step_finite: LLR vector length mismatch");
  }
  for (double v : llr_values) require_finite_llr(v);
  const double stat = kernels::cusum_update(state.stats, llr_values);
  return {true, stat, stat >= params.threshold_a};
}

StepOutcome gcusum_step_expfam(GcusumExpfamState& state, double x,
                               const ExponentialFamilySpec& fam,
                               const DetectorParams& params) {
  if (!std::isfinite(x)) {
    throw EvaluationError("gcusum_step_expfam: non-finite observation");
  }
  kernels::advance_hypotheses(state.sums, state.counts, x);
  state.sums.push_back(x);
  state.counts.push_back(1.0);
  if (params.window && state.sums.size() > *params.window) {
    const std::size_t drop = state.sums.size() - *params.window;
    state.sums.erase(state.sums.begin(), state.sums.begin() + drop);
    state.counts.erase(state.counts.begin(), state.counts.begin() + drop);
  }
  if (fam.gaussian_partition()) {
    state.statistic = kernels::gaussian_glr_max(
        state.sums, state.counts, fam.effective_lower(), fam.theta_upper());
  } else {
    double best = kNegInf;
    for (std::size_t i = 0; i < state.sums.size(); ++i) {
      best = std::max(
          best, glr_sup(state.sums[i],
                        static_cast<std::uint64_t>(state.counts[i]), fam)
                    .value);
    }
    state.statistic = best;
  }
  return {true, state.statistic, state.statistic >= params.threshold_a};
}

namespace {

// Per-member LLR evaluation against the pre-change density, vectorised
// through the kernels when every member is Gaussian-affine.
struct LlrBank {
  std::vector<double> slopes;
  std::vector<double> intercepts;
  std::vector<Density> members;  // generic fallback
  Density pre = Density::gaussian(0.0);
  bool affine = true;

  LlrBank() = default;
  LlrBank(const Density& pre_density, std::span<const Density> member_list)
      : pre(pre_density) {
    affine = std::all_of(member_list.begin(), member_list.end(),
                         [&](const Density& m) {
                           return affine_llr_coeffs(m, pre_density).has_value();
                         });
    if (affine) {
      for (const auto& m : member_list) {
        const auto coeffs = *affine_llr_coeffs(m, pre_density);
        slopes.push_back(coeffs.slope);
        intercepts.push_back(coeffs.intercept);
      }
    } else {
      members.assign(member_list.begin(), member_list.end());
    }
  }

  std::size_t size() const {
    return affine ? slopes.size() : members.size();
  }

  void compute(double x, std::span<double> out) const {
    if (affine) {
      kernels::affine_llr(out, slopes, intercepts, x);
    } else {
      for (std::size_t i = 0; i < members.size(); ++i) {
        out[i] = llr(members[i], pre, x);
      }
    }
  }
};

// Single LLR against the pre-change density with cached affine coefficients.
struct LlrPair {
  double slope = 0.0;
  double intercept = 0.0;
  bool affine = true;
  Density num = Density::gaussian(0.0);
  Density den = Density::gaussian(0.0);

  LlrPair() = default;
  LlrPair(const Density& num_density, const Density& den_density)
      : num(num_density), den(den_density) {
    if (const auto coeffs = affine_llr_coeffs(num_density, den_density)) {
      slope = coeffs->slope;
      intercept = coeffs->intercept;
    } else {
      affine = false;
    }
  }

  double operator()(double x) const {
    return affine ? slope * x + intercept : llr(num, den, x);
  }
};

class CusumDetector final : public Detector {
 public:
  CusumDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)) {
    const double theta =
        spec_.params.design_theta.value_or(family.theta_star());
    llr_ = LlrPair(family.member_for_theta(theta), family.pre());
  }

  bool wants_sample() const override { return true; }

  StepOutcome step(std::optional<double> x) override {
    if (!x) throw ContractViolation("cusum: observation required every step");
    return cusum_step(state_, llr_(*x), spec_.params.threshold_a);
  }

  double statistic() const override { return state_.c; }
  void reset(std::uint64_t) override { state_ = {}; }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<CusumDetector>(*this);
  }

 private:
  LlrPair llr_;
  CusumState state_;
};

class DecusumDetector final : public Detector {
 public:
  DecusumDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)) {
    const Density driver =
        spec_.params.design_theta
            ? family.member_for_theta(*spec_.params.design_theta)
            : family.control();
    llr_ = LlrPair(driver, family.pre());
  }

  bool wants_sample() const override { return decusum_wants_sample(state_); }

  StepOutcome step(std::optional<double> x) override {
    if (x) return decusum_step(state_, spec_.params, llr_(*x));
    return decusum_step(state_, spec_.params, std::nullopt);
  }

  double statistic() const override { return state_.w; }
  void reset(std::uint64_t) override { state_ = {}; }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<DecusumDetector>(*this);
  }
  bool uses_observation_control() const override { return true; }

 private:
  LlrPair llr_;
  DecusumState state_;
};

class GcusumFiniteDetector final : public Detector {
 public:
  GcusumFiniteDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)),
        bank_(family.pre(), family.members()),
        scratch_(bank_.size()) {
    state_.stats.assign(bank_.size(), 0.0);
  }

  bool wants_sample() const override { return true; }

  StepOutcome step(std::optional<double> x) override {
    if (!x) throw ContractViolation("gcusum: observation required every step");
    bank_.compute(*x, scratch_);
    const StepOutcome outcome =
        gcusum_step_finite(state_, scratch_, spec_.params);
    statistic_ = outcome.statistic;
    return outcome;
  }

  double statistic() const override { return statistic_; }
  void reset(std::uint64_t) override {
    std::fill(state_.stats.begin(), state_.stats.end(), 0.0);
    statistic_ = 0.0;
  }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<GcusumFiniteDetector>(*this);
  }

 private:
  LlrBank bank_;
  std::vector<double> scratch_;
  GcusumFiniteState state_;
  double statistic_ = 0.0;
};

class GcusumExpfamDetector final : public Detector {
 public:
  GcusumExpfamDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)), fam_(family.expfam()) {
    if (fam_.effective_lower() > fam_.theta_upper()) {
      throw ConfigError(
          "gcusum: effective parameter interval is empty after the epsilon "
          "exclusion");
    }
  }

  bool wants_sample() const override { return true; }

  StepOutcome step(std::optional<double> x) override {
    if (!x) throw ContractViolation("gcusum: observation required every step");
    return gcusum_step_expfam(state_, *x, fam_, spec_.params);
  }

  double statistic() const override { return state_.statistic; }
  void reset(std::uint64_t) override { state_ = {}; }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<GcusumExpfamDetector>(*this);
  }

 private:
  ExponentialFamilySpec fam_;
  GcusumExpfamState state_;
};

// Finite-family GDECuSum: DECuSum on the control density drives sampling;
// per-member CuSum banks advance only on sampled steps and are frozen
// (bitwise) across skips. When the control density is the theta* member,
// the stopping statistic is max{W, max over other members' CuSums}; with an
// external control density all members run CuSums and W only controls.
class GdecusumFiniteDetector final : public Detector {
 public:
  GdecusumFiniteDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)),
        control_llr_(family.control(), family.pre()),
        control_in_statistic_(family.control_is_theta_star()) {
    std::vector<Density> detect_members;
    for (std::size_t i = 0; i < family.members().size(); ++i) {
      if (control_in_statistic_ && i == family.theta_star_index()) continue;
      detect_members.push_back(family.members()[i]);
    }
    bank_ = LlrBank(family.pre(), detect_members);
    scratch_.resize(bank_.size());
    detect_.stats.assign(bank_.size(), 0.0);
    detect_stat_ = bank_.size() == 0 ? kNegInf : 0.0;
  }

  bool wants_sample() const override { return decusum_wants_sample(control_); }

  StepOutcome step(std::optional<double> x) override {
    if (wants_sample()) {
      if (!x) {
        throw ContractViolation("gdecusum: observation missing while sampling");
      }
      decusum_step(control_, spec_.params, control_llr_(*x));
      if (!detect_.stats.empty()) {
        bank_.compute(*x, scratch_);
        detect_stat_ =
            gcusum_step_finite(detect_, scratch_, spec_.params).statistic;
      }
      return outcome(true);
    }
    if (x) {
      throw ContractViolation("gdecusum: observation supplied while skipping");
    }
    decusum_step(control_, spec_.params, std::nullopt);
    return outcome(false);
  }

  double statistic() const override { return composite(); }
  void reset(std::uint64_t) override {
    control_ = {};
    std::fill(detect_.stats.begin(), detect_.stats.end(), 0.0);
    detect_stat_ = detect_.stats.empty() ? kNegInf : 0.0;
  }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<GdecusumFiniteDetector>(*this);
  }
  bool uses_observation_control() const override { return true; }

 private:
  double composite() const {
    if (!control_in_statistic_) return detect_stat_;
    return std::max(control_.w, detect_stat_);
  }

  StepOutcome outcome(bool sampled) const {
    const double stat = composite();
    return {sampled, stat, stat >= spec_.params.threshold_a};
  }

  LlrPair control_llr_;
  bool control_in_statistic_;
  LlrBank bank_;
  std::vector<double> scratch_;
  DecusumState control_;
  GcusumFiniteState detect_;
  double detect_stat_ = 0.0;
};

// Exponential-family GDECuSum: the GLR statistic runs over sampled
// observations only; start-hypotheses open exactly at sampled steps, and
// the statistic is frozen across skips.
class GdecusumExpfamDetector final : public Detector {
 public:
  GdecusumExpfamDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)),
        fam_(family.expfam()),
        control_llr_(family.control(), family.pre()) {
    if (fam_.effective_lower() > fam_.theta_upper()) {
      throw ConfigError(
          "gdecusum: effective parameter interval is empty after the epsilon "
          "exclusion");
    }
  }

  bool wants_sample() const override { return decusum_wants_sample(control_); }

  StepOutcome step(std::optional<double> x) override {
    if (wants_sample()) {
      if (!x) {
        throw ContractViolation("gdecusum: observation missing while sampling");
      }
      decusum_step(control_, spec_.params, control_llr_(*x));
      gcusum_step_expfam(detect_, *x, fam_, spec_.params);
      return outcome(true);
    }
    if (x) {
      throw ContractViolation("gdecusum: observation supplied while skipping");
    }
    decusum_step(control_, spec_.params, std::nullopt);
    return outcome(false);
  }

  double statistic() const override { return detect_.statistic; }
  void reset(std::uint64_t) override {
    control_ = {};
    detect_ = {};
  }
  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<GdecusumExpfamDetector>(*this);
  }
  bool uses_observation_control() const override { return true; }

 private:
  StepOutcome outcome(bool sampled) const {
    return {sampled, detect_.statistic,
            detect_.statistic >= spec_.params.threshold_a};
  }

  ExponentialFamilySpec fam_;
  LlrPair control_llr_;
  DecusumState control_;
  GcusumExpfamState detect_;
};

// GCuSum with data-independent skipping: on skip steps the wrapped state is
// frozen and no observation is requested.
class FractionalDetector final : public Detector {
 public:
  FractionalDetector(DetectorSpec spec, const FamilySpec& family)
      : Detector(std::move(spec)),
        pattern_(*spec_.params.skip_pattern),
        rng_(0, 0) {
    DetectorSpec inner_spec = spec_;
    inner_spec.kind = DetectorKind::kGcusum;
    inner_spec.params.skip_pattern.reset();
    inner_ = make_detector(inner_spec, family);
    reset(0);
  }

  FractionalDetector(const FractionalDetector& other)
      : Detector(other.spec_),
        pattern_(other.pattern_),
        rng_(other.rng_),
        inner_(other.inner_->clone()),
        steps_taken_(other.steps_taken_),
        next_keep_(other.next_keep_) {}

  bool wants_sample() const override { return next_keep_; }

  StepOutcome step(std::optional<double> x) override {
    if (next_keep_ != x.has_value()) {
      throw ContractViolation(
          next_keep_ ? "fractional: observation missing on a keep step"
                     : "fractional: observation supplied on a skip step");
    }
    StepOutcome out;
    if (next_keep_) {
      out = inner_->step(x);
    } else {
      const double stat = inner_->statistic();
      out = {false, stat, stat >= spec_.params.threshold_a};
    }
    ++steps_taken_;
    draw_next_keep();
    return out;
  }

  double statistic() const override { return inner_->statistic(); }

  void reset(std::uint64_t noise_seed) override {
    if (inner_) inner_->reset(noise_seed);
    rng_ = RngStream(noise_seed, 0);
    steps_taken_ = 0;
    draw_next_keep();
  }

  std::unique_ptr<Detector> clone() const override {
    return std::make_unique<FractionalDetector>(*this);
  }

 private:
  void draw_next_keep() {
    if (pattern_.kind == SkipPattern::Kind::kPeriod2) {
      // 1-indexed steps; odd steps are kept.
      next_keep_ = (steps_taken_ % 2) == 0;
    } else {
      next_keep_ = rng_.uniform() <= pattern_.keep_probability;
    }
  }

  SkipPattern pattern_;
  RngStream rng_;
  std::unique_ptr<Detector> inner_;
  std::uint64_t steps_taken_ = 0;
  bool next_keep_ = true;
};

void validate_spec(const DetectorSpec& spec) {
  const auto& p = spec.params;
  if (!(p.threshold_a >= 0.0)) {
    throw ConfigError("detector threshold A must be >= 0");
  }
  const bool glr_based = spec.kind == DetectorKind::kGcusum ||
                         spec.kind == DetectorKind::kGdecusum ||
                         spec.kind == DetectorKind::kFractional;
  if (glr_based && !(p.threshold_a > 0.0)) {
    throw ConfigError("GLR-based detectors require threshold A > 0");
  }
  const bool data_efficient = spec.kind == DetectorKind::kDecusum ||
                              spec.kind == DetectorKind::kGdecusum;
  if (data_efficient) {
    if (!(p.mu > 0.0)) {
      throw ConfigError("data-efficient detectors require mu > 0");
    }
    if (!(p.h >= 0.0)) {
      throw ConfigError("undershoot truncation h must be >= 0 (or infinite)");
    }
  }
  if (p.window && *p.window < 1) {
    throw ConfigError("GLR window must be >= 1 when set");
  }
  if (spec.kind == DetectorKind::kFractional) {
    if (!p.skip_pattern) {
      throw ConfigError("fractional sampling requires a skip pattern");
    }
    if (p.skip_pattern->kind == SkipPattern::Kind::kBernoulli &&
        !(p.skip_pattern->keep_probability >= 0.0 &&
          p.skip_pattern->keep_probability <= 1.0)) {
      throw ConfigError("Bernoulli keep probability must lie in [0, 1]");
    }
  }
}

}  // namespace

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec,
                                        const FamilySpec& family) {
  validate_spec(spec);
  DetectorSpec named = spec;
  if (named.name.empty()) {
    named.name = std::string(detector_kind_name(spec.kind));
  }
  switch (spec.kind) {
    case DetectorKind::kCusum:
      return std::make_unique<CusumDetector>(std::move(named), family);
    case DetectorKind::kDecusum:
      return std::make_unique<DecusumDetector>(std::move(named), family);
    case DetectorKind::kGcusum:
      if (family.is_finite()) {
        return std::make_unique<GcusumFiniteDetector>(std::move(named), family);
      }
      return std::make_unique<GcusumExpfamDetector>(std::move(named), family);
    case DetectorKind::kGdecusum:
      if (family.is_finite()) {
        return std::make_unique<GdecusumFiniteDetector>(std::move(named),
                                                        family);
      }
      return std::make_unique<GdecusumExpfamDetector>(std::move(named), family);
    case DetectorKind::kFractional:
      return std::make_unique<FractionalDetector>(std::move(named), family);
  }
  throw ConfigError("unknown detector kind");
}

}  // namespace qcd
