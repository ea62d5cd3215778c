#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qcd/rng.hpp"

namespace qcd {

// Log partition b(theta) of a natural one-parameter exponential family
// f_theta(x) = exp(theta*x - b(theta)) f_0(x). Must be convex with b(0) = 0.
class LogPartition {
 public:
  virtual ~LogPartition() = default;
  virtual double operator()(double theta) const = 0;
  // True for the unit-variance Gaussian partition theta^2/2; enables the
  // closed-form GLR maximiser and exact member sampling.
  virtual bool is_gaussian() const { return false; }
};

class GaussianLogPartition final : public LogPartition {
 public:
  double operator()(double theta) const override { return 0.5 * theta * theta; }
  bool is_gaussian() const override { return true; }
};

// A univariate density: either a unit-variance Gaussian, or an exponential
// family member tilted off a standard normal base by natural parameter theta.
// Immutable after construction; safe to share across threads.
class Density {
 public:
  static Density gaussian(double mean);
  static Density expfam_member(double theta,
                               std::shared_ptr<const LogPartition> partition);

  // Finite for all finite x; throws EvaluationError otherwise.
  double log_density(double x) const;
  double sample(RngStream& rng) const;
  double mean() const;

  // Mean of the equivalent unit-variance Gaussian, when this density is one
  // (plain Gaussian, or a Gaussian-partition exponential family member).
  // Enables closed-form LLR/KL/drift paths.
  std::optional<double> as_gaussian_mean() const;

  std::string describe() const;

  bool operator==(const Density& other) const;

 private:
  struct Gaussian {
    double mean;
    bool operator==(const Gaussian&) const = default;
  };
  struct ExpFamMember {
    double theta;
    std::shared_ptr<const LogPartition> partition;
  };

  explicit Density(Gaussian g) : impl_(g) {}
  explicit Density(ExpFamMember m) : impl_(std::move(m)) {}

  std::variant<Gaussian, ExpFamMember> impl_;
};

// log num(x) - log den(x), closed-form affine in x for Gaussian pairs.
double llr(const Density& num, const Density& den, double x);

// When the LLR is affine in x (Gaussian pairs), its slope and intercept:
// llr(x) = slope*x + intercept. Detectors cache these for the kernels.
struct AffineLlr {
  double slope;
  double intercept;
};
std::optional<AffineLlr> affine_llr_coeffs(const Density& num,
                                           const Density& den);

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = false;  // closed form, no Monte Carlo error
};

// KL divergence E_p[log p/q]. Gaussian pairs use the closed form
// (m_p - m_q)^2 / 2 exactly; otherwise a Monte Carlo estimate from
// n_samples draws of p. Throws EstimationError if the running mean
// becomes non-finite.
KlEstimate kl(const Density& p, const Density& q, RngStream& rng,
              std::uint64_t n_samples);

// One-parameter exponential family over an interval of natural parameters.
// theta_prime_epsilon is the exclusion radius defining the effective
// parameter set used by the GLR statistic: [max(theta_lower, eps), theta_upper].
class ExponentialFamilySpec {
 public:
  ExponentialFamilySpec(Density base,
                        std::shared_ptr<const LogPartition> partition,
                        double theta_lower, double theta_upper,
                        double theta_prime_epsilon = 0.0);

  const Density& base() const { return base_; }
  const LogPartition& partition() const { return *partition_; }
  std::shared_ptr<const LogPartition> partition_ptr() const { return partition_; }
  double theta_lower() const { return theta_lower_; }
  double theta_upper() const { return theta_upper_; }
  double epsilon() const { return epsilon_; }
  // Lower endpoint of the effective interval after the epsilon exclusion.
  double effective_lower() const;
  bool gaussian_partition() const { return partition_->is_gaussian(); }

  Density member(double theta) const;

 private:
  Density base_;
  std::shared_ptr<const LogPartition> partition_;
  double theta_lower_;
  double theta_upper_;
  double epsilon_;
};

// sup over theta in the effective interval of theta*sum - count*b(theta),
// plus the maximiser. Gaussian partition: closed-form clamp of sum/count.
// Generic convex b: golden-section search to 1e-10 absolute tolerance.
struct GlrSup {
  double value;
  double argmax_theta;
};
GlrSup glr_sup(double sum, std::uint64_t count,
               const ExponentialFamilySpec& fam);

// Pre-change density, composite post-change family (finite member list or
// exponential-family interval), the designated least-favorable member
// theta*, and the control density used for observation control (defaults
// to the theta* member; may be any density).
class FamilySpec {
 public:
  static FamilySpec finite(Density pre, std::vector<double> thetas,
                           std::vector<Density> members,
                           std::size_t theta_star_index,
                           std::optional<Density> control_override = {});
  static FamilySpec exponential(ExponentialFamilySpec fam,
                                double theta_star_value,
                                std::optional<Density> control_override = {});

  bool is_finite() const { return !members_.empty(); }
  const Density& pre() const { return pre_; }
  const std::vector<Density>& members() const { return members_; }
  const std::vector<double>& thetas() const { return thetas_; }
  const ExponentialFamilySpec& expfam() const { return *expfam_; }
  const Density& control() const { return control_; }
  double theta_star() const { return theta_star_; }
  // Index of theta* in the finite member list.
  std::size_t theta_star_index() const { return theta_star_index_; }
  // True when the control density is the theta* family member itself.
  bool control_is_theta_star() const { return control_is_theta_star_; }

  // Resolves a post-change parameter value to its member density.
  Density member_for_theta(double theta) const;

 private:
  FamilySpec() = default;

  Density pre_ = Density::gaussian(0.0);
  std::vector<double> thetas_;
  std::vector<Density> members_;
  std::optional<ExponentialFamilySpec> expfam_;
  Density control_ = Density::gaussian(0.0);
  double theta_star_ = 0.0;
  std::size_t theta_star_index_ = 0;
  bool control_is_theta_star_ = true;
};

// Drift of the control log-likelihood ratio log(control/f0) under each
// post-change member: positive drifts for all members mean the designated
// control density is least favorable in the required sense.
struct MemberDrift {
  double theta;
  double drift;
  double std_error;  // 0 when exact
  bool exact;
};
struct DriftReport {
  std::vector<MemberDrift> drifts;
  bool assumption_holds;
};

// Gaussian configurations use the closed form control_mean*theta -
// control_mean^2/2 (exact); otherwise Monte Carlo with n_samples draws per
// member. Exponential-family intervals are probed on a small theta grid
// including both endpoints. assumption_holds requires every drift positive
// (exact) or positive at three standard errors (Monte Carlo).
DriftReport check_least_favorable(const FamilySpec& spec, std::uint64_t seed,
                                  std::uint64_t n_samples);

}  // namespace qcd
