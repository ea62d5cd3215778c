#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qcd/errors.hpp"
#include "qcd/simulation.hpp"

using namespace qcd;

namespace {

FamilySpec standard_family(std::optional<Density> control = {}) {
  const std::vector<double> thetas = {0.4, 0.6, 0.8, 1.0};
  std::vector<Density> members;
  for (const double t : thetas) members.push_back(Density::gaussian(t));
  return FamilySpec::finite(Density::gaussian(0.0), thetas, std::move(members),
                            0, std::move(control));
}

DetectorSpec cusum_spec(double a, double theta) {
  DetectorSpec spec{DetectorKind::kCusum, {}, "cusum"};
  spec.params.threshold_a = a;
  spec.params.design_theta = theta;
  return spec;
}

}  // namespace

TEST_CASE("run_trial basics") {
  TrialConfig cfg{standard_family()};
  cfg.detector = cusum_spec(0.0, 0.6);
  cfg.gamma = kNoChange;
  cfg.horizon = 100;
  cfg.seed = 1;

  SUBCASE("A=0 stops immediately") {
    const TrialResult r = run_trial(cfg);
    CHECK(r.tau == 1);
    CHECK_FALSE(r.censored);
  }

  SUBCASE("replay determinism") {
    cfg.detector = cusum_spec(4.6, 0.6);
    cfg.gamma = 1;
    cfg.theta_true = 0.6;
    cfg.horizon = 100000;
    cfg.seed = 20240309;
    const TrialResult a = run_trial(cfg);
    const TrialResult b = run_trial(cfg);
    CHECK(a.tau == b.tau);
    CHECK(a.pre_change_samples_used == b.pre_change_samples_used);
  }

  SUBCASE("censoring at the horizon") {
    cfg.detector = cusum_spec(1e9, 0.6);
    cfg.horizon = 10;
    const TrialResult r = run_trial(cfg);
    CHECK(r.tau == 10);
    CHECK(r.censored);
    CHECK(r.steps_before_change == 9);
  }

  SUBCASE("result invariants over random configs") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      cfg.detector = cusum_spec(0.5 + 0.2 * static_cast<double>(seed % 7), 0.6);
      cfg.gamma = 1 + seed % 20;
      cfg.theta_true = 0.6;
      cfg.horizon = 200;
      cfg.seed = seed;
      const TrialResult r = run_trial(cfg);
      CHECK(r.tau <= cfg.horizon);
      CHECK(r.pre_change_samples_used <= r.steps_before_change);
      CHECK(r.steps_before_change == std::min(cfg.gamma, r.tau) - 1);
    }
  }
}

TEST_CASE("estimate_far agrees between thread counts (bitwise)") {
  const FamilySpec fam = standard_family();
  const DetectorSpec spec = cusum_spec(2.0, 0.6);
  RunOptions one{1};
  RunOptions four{4};
  const FarResult a = estimate_far(fam, spec, 400, 5000, 99, one);
  const FarResult b = estimate_far(fam, spec, 400, 5000, 99, four);
  CHECK(a.far.value == b.far.value);
  CHECK(a.far.std_error == b.far.std_error);
  CHECK(a.mean_tau.value == b.mean_tau.value);
  CHECK(a.censoring_rate == b.censoring_rate);
}

TEST_CASE("estimate_far censoring paths") {
  const FamilySpec fam = standard_family();

  SUBCASE("all censored throws") {
    const DetectorSpec spec = cusum_spec(1e9, 0.6);
    CHECK_THROWS_AS(estimate_far(fam, spec, 100, 50, 7, RunOptions{1}),
                    EstimationError);
  }

  SUBCASE("sane run produces a consistent delta-method interval") {
    const DetectorSpec spec = cusum_spec(2.5, 0.6);
    const FarResult r = estimate_far(fam, spec, 2000, 100000, 7, RunOptions{1});
    CHECK(r.censoring_rate == 0.0);
    CHECK(r.far.value == doctest::Approx(1.0 / r.mean_tau.value));
    CHECK(r.far_ci.lo < r.far.value);
    CHECK(r.far.value < r.far_ci.hi);
  }
}

TEST_CASE("estimate_cadd structure and errors") {
  const FamilySpec fam = standard_family();
  const DetectorSpec spec = cusum_spec(4.0, 0.6);

  SUBCASE("gamma=1 conditioning is vacuous and the curve is populated") {
    const std::vector<std::uint64_t> grid = {1, 5, 25};
    const CaddResult r = estimate_cadd(fam, spec, 0.6, grid, 400, 5000, 11,
                                       RunOptions{1});
    REQUIRE(r.curve.size() == 3);
    CHECK(r.curve[0].gamma == 1);
    CHECK(r.curve[0].survivors == 400);  // tau >= 1 always
    REQUIRE(r.gamma1.has_value());
    CHECK(r.gamma1->value == r.curve[0].delay.value);
    CHECK(r.max_delay.value >= r.gamma1->value);
  }

  SUBCASE("too few survivors names the gamma") {
    const std::vector<std::uint64_t> grid = {4000};
    try {
      estimate_cadd(fam, spec, 0.6, grid, 200, 5000, 11, RunOptions{1});
      FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
      CHECK(std::string(e.what()).find("4000") != std::string::npos);
    }
  }
}

TEST_CASE("lower_bound values and domain") {
  CHECK(lower_bound(1e-3, 0.18) == doctest::Approx(38.376418216567) .epsilon(1e-9));
  CHECK(lower_bound(std::exp(-1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lower_bound(0.01, 0.18) == doctest::Approx(25.584278811045).epsilon(1e-9));
  CHECK_THROWS_AS(lower_bound(0.0, 0.18), EvaluationError);
  CHECK_THROWS_AS(lower_bound(1.5, 0.18), EvaluationError);
  CHECK_THROWS_AS(lower_bound(0.01, 0.0), EvaluationError);
}

TEST_CASE("estimate_pdc_renewal limits") {
  const Density pre = Density::gaussian(0.0);
  const Density control = Density::gaussian(0.4);

  SUBCASE("h=0 forces PDC = 1") {
    const PdcResult r =
        estimate_pdc_renewal(pre, control, 0.08, 0.0, 1000, 5, RunOptions{1});
    CHECK(r.pdc.value == 1.0);
    CHECK(r.mean_off.value == 0.0);
  }

  SUBCASE("huge mu collapses every skip run to one step") {
    const PdcResult r = estimate_pdc_renewal(
        pre, control, 1e9, std::numeric_limits<double>::infinity(), 2000, 5,
        RunOptions{1});
    CHECK(r.mean_off.value == 1.0);
    CHECK(r.pdc.value ==
          doctest::Approx(r.mean_on.value / (r.mean_on.value + 1.0))
              .epsilon(1e-12));
  }

  SUBCASE("h=inf estimate respects the Wald bound within noise") {
    const PdcResult r = estimate_pdc_renewal(
        pre, control, 0.08, std::numeric_limits<double>::infinity(), 20000, 5,
        RunOptions{1});
    const double bound = pdc_upper_bound(0.08, 0.08);
    CHECK(bound == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.pdc.value <= bound + 3.0 * r.pdc.std_error);
  }

  SUBCASE("non-negative drift under f0 trips the cycle cap") {
    // Control equal to f0 gives a zero walk that never goes negative.
    CHECK_THROWS_AS(estimate_pdc_renewal(pre, Density::gaussian(0.0), 0.1, 1.0,
                                         100, 5, RunOptions{1}),
                    EstimationError);
  }
}

TEST_CASE("renewal and long-run PDC estimators agree") {
  const FamilySpec fam = standard_family();
  DetectorSpec spec{DetectorKind::kDecusum, {}, "decusum"};
  spec.params.threshold_a = 1e9;  // irrelevant to the skip process
  spec.params.mu = 0.08;
  spec.params.h = std::numeric_limits<double>::infinity();

  const PdcResult renewal = estimate_pdc_renewal(
      fam.pre(), fam.control(), 0.08,
      std::numeric_limits<double>::infinity(), 20000, 313, RunOptions{1});
  const PdcResult longrun =
      estimate_pdc_longrun(fam, spec, 20000, 100, 313, RunOptions{1});
  const double pooled = std::hypot(renewal.pdc.std_error, longrun.pdc.std_error);
  CHECK(std::abs(renewal.pdc.value - longrun.pdc.value) <= 4.0 * pooled);
}

TEST_CASE("long-run PDC exact cases") {
  const FamilySpec fam = standard_family();

  SUBCASE("cusum always samples") {
    const DetectorSpec spec = cusum_spec(1e9, 0.6);
    const PdcResult r =
        estimate_pdc_longrun(fam, spec, 2000, 50, 4, RunOptions{1});
    CHECK(r.pdc.value == 1.0);
    CHECK(r.pdc.std_error == 0.0);
  }

  SUBCASE("period-2 fractional sampling uses exactly half") {
    DetectorSpec spec{DetectorKind::kFractional, {}, "fractional"};
    spec.params.threshold_a = 1e9;
    spec.params.skip_pattern = SkipPattern{SkipPattern::Kind::kPeriod2, 0.5};
    const PdcResult r =
        estimate_pdc_longrun(fam, spec, 2000, 50, 4, RunOptions{1});
    CHECK(r.pdc.value == 0.5);
  }
}

TEST_CASE("estimate_q_theta behaviour") {
  const FamilySpec fam = standard_family();

  SUBCASE("strictly positive q at theta = theta*") {
    const QThetaResult r =
        estimate_q_theta(fam, 0.4, 2000, 2000, 77, RunOptions{1});
    CHECK(r.q.value > 0.0);
    CHECK(r.q.value < 1.0);
  }

  SUBCASE("larger drift gives larger q") {
    const QThetaResult low =
        estimate_q_theta(fam, 0.4, 2000, 2000, 77, RunOptions{1});
    const QThetaResult high =
        estimate_q_theta(fam, 1.0, 2000, 2000, 77, RunOptions{1});
    const double pooled = std::hypot(low.q.std_error, high.q.std_error);
    CHECK(high.q.value >= low.q.value - 2.0 * pooled);
  }

  SUBCASE("zero drift decays with the horizon") {
    // Family containing theta*/2 = 0.2: drift 0.4*0.2 - 0.08 = 0 exactly.
    const std::vector<double> thetas = {0.2, 0.4};
    std::vector<Density> members = {Density::gaussian(0.2),
                                    Density::gaussian(0.4)};
    const FamilySpec zero = FamilySpec::finite(
        Density::gaussian(0.0), thetas, std::move(members), 1);
    const QThetaResult short_h =
        estimate_q_theta(zero, 0.2, 3000, 200, 77, RunOptions{1});
    const QThetaResult long_h =
        estimate_q_theta(zero, 0.2, 3000, 5000, 77, RunOptions{1});
    CHECK(long_h.q.value < 0.15);
    CHECK(long_h.q.value <=
          short_h.q.value + 2.0 * std::hypot(short_h.q.std_error,
                                             long_h.q.std_error));
  }

  SUBCASE("negative drift violates Assumption 1") {
    const std::vector<double> thetas = {0.1, 0.4};
    std::vector<Density> members = {Density::gaussian(0.1),
                                    Density::gaussian(0.4)};
    const FamilySpec bad = FamilySpec::finite(
        Density::gaussian(0.0), thetas, std::move(members), 1);
    CHECK_THROWS_AS(estimate_q_theta(bad, 0.1, 1000, 1000, 77, RunOptions{1}),
                    EstimationError);
  }
}

TEST_CASE("augment_gamma_grid probes skip runs for controlled detectors") {
  const FamilySpec fam = standard_family();

  DetectorSpec gc = cusum_spec(4.0, 0.6);
  const std::vector<std::uint64_t> base = {25, 1, 5};
  const auto plain = augment_gamma_grid(fam, gc, base, 1000, 3);
  CHECK(plain == std::vector<std::uint64_t>{1, 5, 25});

  DetectorSpec gd{DetectorKind::kGdecusum, {}, ""};
  gd.params.threshold_a = 1e9;
  gd.params.mu = 0.08;
  gd.params.h = 12.5;
  const auto augmented = augment_gamma_grid(fam, gd, base, 1000, 3);
  CHECK(augmented.size() > 3);
  CHECK(augmented.size() <= 6);
  CHECK(std::is_sorted(augmented.begin(), augmented.end()));
}

TEST_CASE("tradeoff_curve shape, ordering, and determinism") {
  const FamilySpec fam = standard_family();
  std::vector<DetectorSpec> detectors;
  detectors.push_back(cusum_spec(0.0, 0.6));  // threshold overridden per row
  DetectorSpec gd{DetectorKind::kGdecusum, {}, "gdecusum"};
  gd.params.mu = 0.2;
  gd.params.h = 2.0;
  gd.params.threshold_a = 1.0;
  detectors.push_back(gd);

  TradeoffSettings settings;
  settings.far_trials = 200;
  settings.cadd_trials = 150;
  settings.pdc_cycles = 500;
  settings.horizon = 4000;
  settings.gamma_grid = {1, 5};

  const std::vector<double> thresholds = {1.5, 2.5};
  const auto rows = tradeoff_curve(fam, detectors, thresholds, 0.6, settings,
                                   2025, RunOptions{1});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].threshold_a == 1.5);
  CHECK(rows[0].detector == "cusum");
  CHECK(rows[1].detector == "gdecusum");
  CHECK(rows[2].threshold_a == 2.5);
  CHECK(rows[0].pdc.method == PdcMethod::kExact);
  CHECK(rows[0].pdc.pdc.value == 1.0);
  CHECK(rows[1].pdc.method == PdcMethod::kRenewalReward);
  REQUIRE(rows[1].wadd_gap_bound.has_value());
  CHECK(*rows[1].wadd_gap_bound > std::ceil(2.0 / 0.2));

  const auto again = tradeoff_curve(fam, detectors, thresholds, 0.6, settings,
                                    2025, RunOptions{3});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].far.far.value == again[i].far.far.value);
    CHECK(rows[i].cadd.max_delay.value == again[i].cadd.max_delay.value);
    CHECK(rows[i].pdc.pdc.value == again[i].pdc.pdc.value);
  }

  const std::vector<double> bad = {2.5, 1.5};
  CHECK_THROWS_AS(tradeoff_curve(fam, detectors, bad, 0.6, settings, 2025,
                                 RunOptions{1}),
                  ConfigError);
}
