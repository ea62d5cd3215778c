#include "qcd/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qcd/errors.hpp"

namespace qcd {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2

std::string format_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Density Density::gaussian(double mean) {
  if (!std::isfinite(mean)) {
    throw EvaluationError("gaussian density requires a finite mean, got " +
                          format_real(mean));
  }
  return Density(Gaussian{mean});
}

Density Density::expfam_member(double theta,
                               std::shared_ptr<const LogPartition> partition) {
  if (!partition) {
    throw EvaluationError("exponential family member requires a log partition");
  }
  if (!std::isfinite(theta)) {
    throw EvaluationError("exponential family member requires finite theta");
  }
  return Density(ExpFamMember{theta, std::move(partition)});
}

double Density::log_density(double x) const {
  double value;
  if (const auto* g = std::get_if<Gaussian>(&impl_)) {
    const double d = x - g->mean;
    value = -0.5 * d * d - kHalfLog2Pi;
  } else {
    const auto& m = std::get<ExpFamMember>(impl_);
    value = m.theta * x - (*m.partition)(m.theta) - 0.5 * x * x - kHalfLog2Pi;
  }
  if (!std::isfinite(value)) {
    throw EvaluationError("log-density of " + describe() +
                          " is not finite at x=" + format_real(x));
  }
  return value;
}

double Density::sample(RngStream& rng) const {
  if (const auto* g = std::get_if<Gaussian>(&impl_)) {
    return g->mean + rng.gaussian();
  }
  const auto& m = std::get<ExpFamMember>(impl_);
  if (m.partition->is_gaussian()) {
    // Standard normal base tilted by theta with b = theta^2/2 is N(theta, 1).
    return m.theta + rng.gaussian();
  }
  throw EvaluationError("sampling is not implemented for " + describe());
}

double Density::mean() const {
  if (const auto* g = std::get_if<Gaussian>(&impl_)) return g->mean;
  const auto& m = std::get<ExpFamMember>(impl_);
  if (m.partition->is_gaussian()) return m.theta;
  // b'(theta) is the mean of the sufficient statistic.
  const double eps = 1e-6;
  return ((*m.partition)(m.theta + eps) - (*m.partition)(m.theta - eps)) /
         (2.0 * eps);
}

std::optional<double> Density::as_gaussian_mean() const {
  if (const auto* g = std::get_if<Gaussian>(&impl_)) return g->mean;
  const auto& m = std::get<ExpFamMember>(impl_);
  if (m.partition->is_gaussian()) return m.theta;
  return std::nullopt;
}

std::string Density::describe() const {
  if (const auto* g = std::get_if<Gaussian>(&impl_)) {
    return "N(" + format_real(g->mean) + ",1)";
  }
  const auto& m = std::get<ExpFamMember>(impl_);
  return "expfam(theta=" + format_real(m.theta) + ")";
}

bool Density::operator==(const Density& other) const {
  if (const auto* g = std::get_if<Gaussian>(&impl_)) {
    const auto* og = std::get_if<Gaussian>(&other.impl_);
    return og && g->mean == og->mean;
  }
  const auto& m = std::get<ExpFamMember>(impl_);
  const auto* om = std::get_if<ExpFamMember>(&other.impl_);
  if (!om || m.theta != om->theta) return false;
  return m.partition == om->partition ||
         (m.partition->is_gaussian() && om->partition->is_gaussian());
}

double llr(const Density& num, const Density& den, double x) {
  if (!std::isfinite(x)) {
    throw EvaluationError("llr requires finite x, got " + format_real(x));
  }
  if (const auto coeffs = affine_llr_coeffs(num, den)) {
    return coeffs->slope * x + coeffs->intercept;
  }
  const double value = num.log_density(x) - den.log_density(x);
  if (!std::isfinite(value)) {
    throw EvaluationError("llr of " + num.describe() + " vs " + den.describe() +
                          " is not finite at x=" + format_real(x));
  }
  return value;
}

std::optional<AffineLlr> affine_llr_coeffs(const Density& num,
                                           const Density& den) {
  const auto m1 = num.as_gaussian_mean();
  const auto m0 = den.as_gaussian_mean();
  if (!m1 || !m0) return std::nullopt;
  const double slope = *m1 - *m0;
  const double intercept = -0.5 * (*m1 * *m1 - *m0 * *m0);
  return AffineLlr{slope, intercept};
}

KlEstimate kl(const Density& p, const Density& q, RngStream& rng,
              std::uint64_t n_samples) {
  if (n_samples < 1) {
    throw EstimationError("kl requires n_samples >= 1");
  }
  const auto mp = p.as_gaussian_mean();
  const auto mq = q.as_gaussian_mean();
  if (mp && mq) {
    const double d = *mp - *mq;
    return {0.5 * d * d, 0.0, true};
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const double z = llr(p, q, p.sample(rng));
    sum += z;
    sum_sq += z * z;
    if (!std::isfinite(sum)) {
      throw EstimationError("kl estimate diverged for " + p.describe() +
                            " vs " + q.describe());
    }
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var / n), false};
}

ExponentialFamilySpec::ExponentialFamilySpec(
    Density base, std::shared_ptr<const LogPartition> partition,
    double theta_lower, double theta_upper, double theta_prime_epsilon)
    : base_(std::move(base)),
      partition_(std::move(partition)),
      theta_lower_(theta_lower),
      theta_upper_(theta_upper),
      epsilon_(theta_prime_epsilon) {
  if (!partition_) {
    throw EvaluationError("exponential family requires a log partition");
  }
  if (!(theta_lower_ > 0.0)) {
    throw EvaluationError("exponential family requires theta_lower > 0, got " +
                          format_real(theta_lower_));
  }
  if (!(theta_upper_ > theta_lower_)) {
    throw EvaluationError("exponential family requires theta_upper > theta_lower");
  }
  if (!(epsilon_ >= 0.0)) {
    throw EvaluationError("theta_prime_epsilon must be >= 0");
  }
  if ((*partition_)(0.0) != 0.0) {
    throw EvaluationError("log partition must satisfy b(0) = 0 exactly");
  }
  // Convexity probe: sampled second differences must be non-negative
  // (up to rounding) across [0, theta_upper].
  const int probes = 64;
  const double step = theta_upper_ / probes;
  for (int i = 1; i < probes; ++i) {
    const double t = i * step;
    const double second =
        (*partition_)(t - step) - 2.0 * (*partition_)(t) + (*partition_)(t + step);
    if (second < -1e-9) {
      throw EvaluationError("log partition is not convex near theta=" +
                            format_real(t));
    }
  }
}

double ExponentialFamilySpec::effective_lower() const {
  return std::max(theta_lower_, epsilon_);
}

Density ExponentialFamilySpec::member(double theta) const {
  return Density::expfam_member(theta, partition_);
}

namespace {

// Golden-section maximisation of the concave map theta -> theta*sum -
// count*b(theta) on [lo, hi], to absolute tolerance tol on theta.
GlrSup golden_section_sup(double sum, double count,
                          const LogPartition& partition, double lo, double hi,
                          double tol) {
  const double inv_phi = 0.6180339887498949;
  const auto objective = [&](double th) {
    return th * sum - count * partition(th);
  };
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double th = 0.5 * (a + b);
  // Endpoints can beat the interior midpoint when the maximiser is clamped.
  double best_theta = th;
  double best = objective(th);
  for (double cand : {lo, hi}) {
    const double v = objective(cand);
    if (v > best) {
      best = v;
      best_theta = cand;
    }
  }
  return {best, best_theta};
}

}  // namespace

GlrSup glr_sup(double sum, std::uint64_t count,
               const ExponentialFamilySpec& fam) {
  if (count < 1) {
    throw EvaluationError("glr_sup requires count >= 1");
  }
  const double lo = fam.effective_lower();
  const double hi = fam.theta_upper();
  if (lo > hi) {
    throw EvaluationError(
        "effective parameter interval is empty after the epsilon exclusion");
  }
  const double n = static_cast<double>(count);
  if (fam.gaussian_partition()) {
    const double th = std::min(std::max(sum / n, lo), hi);
    return {th * sum - 0.5 * (th * th) * n, th};
  }
  return golden_section_sup(sum, n, fam.partition(), lo, hi, 1e-10);
}

FamilySpec FamilySpec::finite(Density pre, std::vector<double> thetas,
                              std::vector<Density> members,
                              std::size_t theta_star_index,
                              std::optional<Density> control_override) {
  if (members.empty()) {
    throw EvaluationError("finite post-change family must not be empty");
  }
  if (thetas.size() != members.size()) {
    throw EvaluationError("theta labels and member densities differ in length");
  }
  if (theta_star_index >= members.size()) {
    throw EvaluationError("theta_star_index out of range");
  }
  FamilySpec spec;
  spec.pre_ = std::move(pre);
  spec.thetas_ = std::move(thetas);
  spec.members_ = std::move(members);
  spec.theta_star_index_ = theta_star_index;
  spec.theta_star_ = spec.thetas_[theta_star_index];
  if (control_override) {
    spec.control_ = std::move(*control_override);
    spec.control_is_theta_star_ =
        spec.control_ == spec.members_[theta_star_index];
  } else {
    spec.control_ = spec.members_[theta_star_index];
    spec.control_is_theta_star_ = true;
  }
  return spec;
}

FamilySpec FamilySpec::exponential(ExponentialFamilySpec fam,
                                   double theta_star_value,
                                   std::optional<Density> control_override) {
  if (theta_star_value < fam.theta_lower() ||
      theta_star_value > fam.theta_upper()) {
    throw EvaluationError("theta_star must lie inside the parameter interval");
  }
  FamilySpec spec;
  spec.pre_ = fam.base();
  spec.theta_star_ = theta_star_value;
  if (control_override) {
    spec.control_ = std::move(*control_override);
    spec.control_is_theta_star_ =
        spec.control_ == fam.member(theta_star_value);
  } else {
    spec.control_ = fam.member(theta_star_value);
    spec.control_is_theta_star_ = true;
  }
  spec.expfam_.emplace(std::move(fam));
  return spec;
}

Density FamilySpec::member_for_theta(double theta) const {
  if (is_finite()) {
    for (std::size_t i = 0; i < thetas_.size(); ++i) {
      if (thetas_[i] == theta) return members_[i];
    }
    throw EvaluationError("theta=" + format_real(theta) +
                          " is not a member of the finite family");
  }
  if (theta < expfam_->theta_lower() || theta > expfam_->theta_upper()) {
    throw EvaluationError("theta=" + format_real(theta) +
                          " lies outside the family interval");
  }
  return expfam_->member(theta);
}

namespace {

MemberDrift drift_for_member(const Density& member, double theta,
                             const Density& control, const Density& pre,
                             std::uint64_t seed, std::uint64_t member_index,
                             std::uint64_t n_samples) {
  const auto mc = control.as_gaussian_mean();
  const auto m0 = pre.as_gaussian_mean();
  const auto mt = member.as_gaussian_mean();
  if (mc && m0 && mt) {
    // E^theta[(c-m0)X - (c^2-m0^2)/2] with X ~ N(mt, 1).
    const double drift = (*mc - *m0) * *mt - 0.5 * (*mc * *mc - *m0 * *m0);
    return {theta, drift, 0.0, true};
  }
  RngStream rng(seed, member_index);
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const double z = llr(control, pre, member.sample(rng));
    sum += z;
    sum_sq += z * z;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {theta, mean, std::sqrt(var / n), false};
}

}  // namespace

DriftReport check_least_favorable(const FamilySpec& spec, std::uint64_t seed,
                                  std::uint64_t n_samples) {
  if (spec.is_finite() && spec.members().empty()) {
    throw EstimationError("cannot check an empty family");
  }
  DriftReport report;
  report.assumption_holds = true;
  const auto add = [&](const Density& member, double theta,
                       std::uint64_t idx) {
    MemberDrift d = drift_for_member(member, theta, spec.control(), spec.pre(),
                                     seed, idx, n_samples);
    const bool ok = d.exact ? d.drift > 0.0 : d.drift > 3.0 * d.std_error;
    report.assumption_holds = report.assumption_holds && ok;
    report.drifts.push_back(d);
  };
  if (spec.is_finite()) {
    for (std::size_t i = 0; i < spec.members().size(); ++i) {
      add(spec.members()[i], spec.thetas()[i], i);
    }
  } else {
    // Probe a small grid spanning the interval, endpoints included.
    const auto& fam = spec.expfam();
    const int points = 5;
    for (int i = 0; i < points; ++i) {
      const double t = fam.theta_lower() +
                       (fam.theta_upper() - fam.theta_lower()) * i /
                           (points - 1);
      add(fam.member(t), t, static_cast<std::uint64_t>(i));
    }
  }
  return report;
}

}  // namespace qcd
