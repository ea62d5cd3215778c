#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "qcd/distributions.hpp"
#include "qcd/errors.hpp"
#include "qcd/rng.hpp"

using namespace qcd;

namespace {

// Convex non-Gaussian log partition with b(0) = 0, for the generic paths.
class CoshLogPartition final : public LogPartition {
 public:
  double operator()(double theta) const override {
    return std::cosh(theta) - 1.0;
  }
};

FamilySpec standard_family(double theta_star = 0.4,
                        std::optional<Density> control = {}) {
  const std::vector<double> thetas = {0.4, 0.6, 0.8, 1.0};
  std::vector<Density> members;
  for (const double t : thetas) members.push_back(Density::gaussian(t));
  std::size_t star = 0;
  while (thetas[star] != theta_star) ++star;
  return FamilySpec::finite(Density::gaussian(0.0), thetas, std::move(members),
                            star, std::move(control));
}

}  // namespace

TEST_CASE("llr closed-form examples") {
  const Density f0 = Density::gaussian(0.0);
  CHECK(llr(Density::gaussian(0.6), f0, 1.0) == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(llr(f0, f0, 3.25) == 0.0);
  CHECK(llr(Density::gaussian(0.4), f0, 0.0) ==
        doctest::Approx(-0.08).epsilon(1e-12));
}

TEST_CASE("llr antisymmetry") {
  RngStream rng(5, 0);
  const Density p = Density::gaussian(0.7);
  const Density q = Density::gaussian(-0.2);
  for (int i = 0; i < 200; ++i) {
    const double x = 3.0 * rng.gaussian();
    CHECK(llr(p, q, x) == doctest::Approx(-llr(q, p, x)).epsilon(1e-12));
  }
}

TEST_CASE("llr rejects non-finite input") {
  const Density p = Density::gaussian(0.4);
  CHECK_THROWS_AS(llr(p, p, std::numeric_limits<double>::quiet_NaN()),
                  EvaluationError);
}

TEST_CASE("kl closed form and quadrature oracle") {
  RngStream rng(17, 0);
  const Density f0 = Density::gaussian(0.0);
  const KlEstimate a = kl(Density::gaussian(0.6), f0, rng, 1);
  CHECK(a.exact);
  CHECK(a.value == doctest::Approx(0.18).epsilon(1e-12));
  // Independent check: numerical integration of the KL integrand.
  CHECK(oracles::kl_by_quadrature(Density::gaussian(0.6), f0, -12.0, 12.0) ==
        doctest::Approx(0.18).epsilon(1e-7));

  const KlEstimate same = kl(f0, f0, rng, 1);
  CHECK(same.value == 0.0);

  const KlEstimate b = kl(Density::gaussian(0.4), f0, rng, 1);
  CHECK(b.value == doctest::Approx(0.08).epsilon(1e-12));
}

TEST_CASE("kl Monte Carlo path agrees with quadrature") {
  // q is a non-Gaussian exponential family member, forcing the MC path.
  const auto cosh_b = std::make_shared<CoshLogPartition>();
  const Density p = Density::gaussian(0.5);
  const Density q = Density::expfam_member(0.8, cosh_b);
  RngStream rng(23, 0);
  const KlEstimate est = kl(p, q, rng, 200000);
  CHECK_FALSE(est.exact);
  const double truth = oracles::kl_by_quadrature(p, q, -12.0, 12.0);
  CHECK(std::abs(est.value - truth) <= 4.0 * est.std_error);
  CHECK(est.value >= -3.0 * est.std_error);  // non-negativity within noise
}

TEST_CASE("density sampling matches the analytic mean") {
  RngStream rng(31, 0);
  for (const double mean : {0.0, 0.6, -1.3}) {
    const Density d = Density::gaussian(mean);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += d.sample(rng);
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum / n - mean) < 5.0 * se);
  }
  // Gaussian-partition exponential family member is N(theta, 1).
  const Density m =
      Density::expfam_member(0.7, std::make_shared<GaussianLogPartition>());
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += m.sample(rng);
  CHECK(std::abs(sum / 10000 - 0.7) < 5.0 * 0.01);
}

TEST_CASE("log densities stay finite and consistent") {
  const auto cosh_b = std::make_shared<CoshLogPartition>();
  const Density member = Density::expfam_member(0.9, cosh_b);
  const Density base = Density::gaussian(0.0);
  for (const double x : {-30.0, -1.0, 0.0, 2.5, 30.0}) {
    CHECK(std::isfinite(member.log_density(x)));
    // f_theta(x) = exp(theta x - b(theta)) f_0(x)
    CHECK(member.log_density(x) ==
          doctest::Approx(0.9 * x - (std::cosh(0.9) - 1.0) +
                          base.log_density(x))
              .epsilon(1e-12));
  }
}

TEST_CASE("exponential family spec validation") {
  const Density base = Density::gaussian(0.0);
  const auto gaussian_b = std::make_shared<GaussianLogPartition>();
  CHECK_NOTHROW(ExponentialFamilySpec(base, gaussian_b, 0.2, 1.0));
  CHECK_THROWS_AS(ExponentialFamilySpec(base, gaussian_b, 0.0, 1.0),
                  EvaluationError);
  CHECK_THROWS_AS(ExponentialFamilySpec(base, gaussian_b, 0.5, 0.2),
                  EvaluationError);

  class ShiftedPartition final : public LogPartition {
   public:
    double operator()(double theta) const override { return theta * theta + 0.1; }
  };
  CHECK_THROWS_AS(
      ExponentialFamilySpec(base, std::make_shared<ShiftedPartition>(), 0.2, 1.0),
      EvaluationError);

  class ConcavePartition final : public LogPartition {
   public:
    double operator()(double theta) const override { return -theta * theta; }
  };
  CHECK_THROWS_AS(
      ExponentialFamilySpec(base, std::make_shared<ConcavePartition>(), 0.2, 1.0),
      EvaluationError);
}

TEST_CASE("glr_sup closed-form examples") {
  const ExponentialFamilySpec fam(Density::gaussian(0.0),
                                  std::make_shared<GaussianLogPartition>(), 0.2,
                                  1.0);
  const GlrSup a = glr_sup(3.0, 5, fam);
  CHECK(a.argmax_theta == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(a.value == doctest::Approx(0.9).epsilon(1e-12));

  const GlrSup low = glr_sup(-5.0, 5, fam);
  CHECK(low.argmax_theta == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(low.value == doctest::Approx(-1.1).epsilon(1e-12));

  const GlrSup high = glr_sup(10.0, 5, fam);
  CHECK(high.argmax_theta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(high.value == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("glr_sup epsilon exclusion and empty interval") {
  const Density base = Density::gaussian(0.0);
  const auto gaussian_b = std::make_shared<GaussianLogPartition>();
  const ExponentialFamilySpec fam(base, gaussian_b, 0.2, 1.0, 0.5);
  CHECK(fam.effective_lower() == 0.5);
  const GlrSup s = glr_sup(1.0, 5, fam);  // mean 0.2 clamps to 0.5
  CHECK(s.argmax_theta == doctest::Approx(0.5));

  const ExponentialFamilySpec empty(base, gaussian_b, 0.2, 1.0, 1.5);
  CHECK_THROWS_AS(glr_sup(1.0, 5, empty), EvaluationError);
}

TEST_CASE("glr_sup dominance and grid brute force") {
  RngStream rng(41, 0);
  const auto gaussian_b = std::make_shared<GaussianLogPartition>();
  const auto cosh_b = std::make_shared<CoshLogPartition>();
  const Density base = Density::gaussian(0.0);
  for (const auto& partition :
       std::vector<std::shared_ptr<const LogPartition>>{gaussian_b, cosh_b}) {
    const ExponentialFamilySpec fam(base, partition, 0.2, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
      const std::uint64_t count = 1 + (rng.next_u64() % 30);
      const double sum =
          static_cast<double>(count) * (0.6 + 1.5 * rng.gaussian());
      const GlrSup s = glr_sup(sum, count, fam);
      // Dominance: no fixed theta beats the supremum.
      for (int j = 0; j <= 20; ++j) {
        const double th = 0.2 + 0.8 * j / 20.0;
        const double value =
            th * sum - static_cast<double>(count) * (*partition)(th);
        CHECK(value <= s.value + 1e-9);
      }
      const double grid = oracles::glr_grid_sup(
          sum, static_cast<double>(count), *partition, 0.2, 1.0);
      CHECK(std::abs(s.value - grid) < 1e-6);
    }
  }
}

TEST_CASE("check_least_favorable closed-form drifts") {
  const FamilySpec fam = standard_family(0.4);
  const DriftReport report = check_least_favorable(fam, 1, 1000);
  REQUIRE(report.drifts.size() == 4);
  CHECK(report.drifts[1].theta == 0.6);
  CHECK(report.drifts[1].drift == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(report.drifts[1].exact);
  // Drift at theta* equals D(f_theta* || f0).
  CHECK(report.drifts[0].drift == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(report.assumption_holds);
}

TEST_CASE("check_least_favorable detects a violating member") {
  const std::vector<double> thetas = {0.1, 0.4, 0.6};
  std::vector<Density> members;
  for (const double t : thetas) members.push_back(Density::gaussian(t));
  const FamilySpec fam = FamilySpec::finite(Density::gaussian(0.0), thetas,
                                            std::move(members), 1);
  const DriftReport report = check_least_favorable(fam, 1, 1000);
  CHECK(report.drifts[0].drift == doctest::Approx(-0.04).epsilon(1e-12));
  CHECK_FALSE(report.assumption_holds);
}

TEST_CASE("check_least_favorable Monte Carlo agrees with hand closed form") {
  // Non-Gaussian control forces the Monte Carlo path; its LLR against the
  // N(0,1) base is theta_c*x - b(theta_c), so the drift under N(m,1) is
  // theta_c*m - b(theta_c).
  const auto cosh_b = std::make_shared<CoshLogPartition>();
  const double theta_c = 0.5;
  const Density control = Density::expfam_member(theta_c, cosh_b);
  const FamilySpec fam = standard_family(0.4, control);
  const DriftReport report = check_least_favorable(fam, 97, 200000);
  for (const MemberDrift& d : report.drifts) {
    CHECK_FALSE(d.exact);
    const double truth = theta_c * d.theta - (std::cosh(theta_c) - 1.0);
    CHECK(std::abs(d.drift - truth) <= 4.0 * d.std_error);
  }
}

TEST_CASE("family construction guards") {
  CHECK_THROWS_AS(
      FamilySpec::finite(Density::gaussian(0.0), {}, {}, 0),
      EvaluationError);
  const FamilySpec fam = standard_family();
  CHECK(fam.theta_star() == 0.4);
  CHECK(fam.control_is_theta_star());
  CHECK(fam.member_for_theta(0.6) == Density::gaussian(0.6));
  CHECK_THROWS_AS(fam.member_for_theta(0.5), EvaluationError);

  const FamilySpec overridden = standard_family(0.4, Density::gaussian(0.3));
  CHECK_FALSE(overridden.control_is_theta_star());
  CHECK(overridden.control() == Density::gaussian(0.3));
}
