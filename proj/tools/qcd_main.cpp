#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qcd/config.hpp"
#include "qcd/csv.hpp"
#include "qcd/errors.hpp"

namespace {

using namespace qcd;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "JSON experiment config")
      ->required();
  cmd->add_option("--seed", args->seed, "override the config master seed")
      ->each([args](const std::string&) { args->seed_set = true; });
  cmd->add_option("--threads", args->threads,
                  "worker threads (0 = hardware concurrency)");
}

ExperimentConfig load(const CommonArgs& args) {
  ExperimentConfig config = load_config(args.config_path);
  if (args.seed_set) config.seed = args.seed;
  return config;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), spec, v);
  return buffer;
}

int run_check_family(const CommonArgs& args) {
  const ExperimentConfig config = load(args);
  const FamilySpec family = build_family(config.family);
  const DriftReport report = check_least_favorable(family, config.seed, 100000);

  std::cout << "family: "
            << (config.family.type == FamilyConfig::Type::kGaussianFinite
                    ? "gaussian_finite"
                    : "gaussian_expfam")
            << ", theta* = " << fmt(family.theta_star())
            << ", control = " << family.control().describe() << "\n";
  RngStream kl_rng(config.seed, 0x4b1u);
  for (const MemberDrift& d : report.drifts) {
    const Density member = family.member_for_theta(d.theta);
    const KlEstimate fwd = kl(member, family.pre(), kl_rng, 100000);
    const KlEstimate rev = kl(family.pre(), member, kl_rng, 100000);
    std::cout << "theta=" << fmt(d.theta) << "  drift=" << fmt(d.drift);
    if (d.exact) {
      std::cout << " (exact)";
    } else {
      std::cout << " +- " << fmt(d.std_error);
    }
    std::cout << "  D(f_theta||f0)=" << fmt(fwd.value)
              << "  D(f0||f_theta)=" << fmt(rev.value) << "\n";
  }
  std::cout << "Assumption 1 (least favorable control): "
            << (report.assumption_holds ? "HOLDS" : "VIOLATED") << "\n";
  return report.assumption_holds ? 0 : 2;
}

int run_curve(const CommonArgs& args, const std::string& out_override,
              bool to_stdout) {
  const ExperimentConfig config = load(args);
  const FamilySpec family = build_family(config.family);
  const RunOptions options{args.threads};
  const TradeoffSettings settings = settings_from(config);

  std::cerr << "[curve] " << config.detectors.size() << " detector(s) x "
            << config.thresholds.size() << " threshold(s), seed "
            << config.seed << "\n";
  const std::vector<MetricsReport> reports =
      tradeoff_curve(family, config.detectors, config.thresholds,
                     config.theta_true, settings, config.seed, options);

  std::vector<CsvRow> rows;
  rows.reserve(reports.size());
  for (const MetricsReport& report : reports) {
    rows.push_back(row_from_report(report));
    std::cerr << "[curve] A=" << fmt(report.threshold_a) << " "
              << report.detector << ": FAR=" << fmt(report.far.far.value)
              << " CADD=" << fmt(report.cadd.max_delay.value)
              << " PDC=" << fmt(report.pdc.pdc.value) << "\n";
  }
  const std::string csv = format_csv(rows);

  const std::string path = out_override.empty() ? config.output : out_override;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open output file: " << path << "\n";
    return 3;
  }
  out << csv;
  out.close();
  std::cerr << "[curve] wrote " << rows.size() << " row(s) to " << path << "\n";
  if (to_stdout) std::cout << csv;
  return 0;
}

int run_pdc(const CommonArgs& args) {
  const ExperimentConfig config = load(args);
  const FamilySpec family = build_family(config.family);
  const RunOptions options{args.threads};

  bool any = false;
  for (const DetectorSpec& spec : config.detectors) {
    if (spec.kind != DetectorKind::kDecusum &&
        spec.kind != DetectorKind::kGdecusum) {
      continue;
    }
    any = true;
    const Density driver =
        spec.kind == DetectorKind::kDecusum && spec.params.design_theta
            ? family.member_for_theta(*spec.params.design_theta)
            : family.control();
    const double mu = spec.params.mu;
    const double h = spec.params.h;

    std::cout << "detector " << spec.name << " (mu=" << fmt(mu) << ", h="
              << (std::isinf(h) ? std::string("inf") : fmt(h)) << "):\n";
    const PdcResult renewal = estimate_pdc_renewal(
        family.pre(), driver, mu, h, config.pdc_cycles, config.seed, options);
    std::cout << "  renewal-reward PDC = " << fmt(renewal.pdc.value, "%.6f")
              << "  95% CI [" << fmt(renewal.ci.lo) << ", "
              << fmt(renewal.ci.hi) << "]"
              << "  (E[tau-]=" << fmt(renewal.mean_on.value)
              << ", E[skip]=" << fmt(renewal.mean_off.value) << ")\n";

    // The skip process does not depend on the threshold; pin a configured
    // value so the detector passes construction validation.
    DetectorSpec freerun_spec = spec;
    freerun_spec.params.threshold_a = std::max(config.thresholds.back(), 1.0);
    const std::uint64_t horizon = std::max<std::uint64_t>(10000, config.horizon);
    const PdcResult longrun = estimate_pdc_longrun(family, freerun_spec, horizon,
                                                   200, config.seed, options);
    std::cout << "  long-run PDC       = " << fmt(longrun.pdc.value, "%.6f")
              << "  95% CI [" << fmt(longrun.ci.lo) << ", "
              << fmt(longrun.ci.hi) << "]\n";

    RngStream rng(config.seed, 0);
    const KlEstimate d0 = kl(family.pre(), driver, rng, 100000);
    // Wald bound applies to h = infinity; reported alongside finite-h runs
    // for reference without asserting an ordering.
    std::cout << "  h=inf Wald bound   = "
              << fmt(pdc_upper_bound(mu, d0.value), "%.6f") << "\n";
  }
  if (!any) {
    std::cout << "PDC is identically 1: no data-efficient detector "
                 "(decusum/gdecusum) in the config\n";
    return 2;
  }
  return 0;
}

int run_simulate(const CommonArgs& args) {
  const ExperimentConfig config = load(args);
  const FamilySpec family = build_family(config.family);
  const RunOptions options{args.threads};
  const TradeoffSettings settings = settings_from(config);

  const std::vector<MetricsReport> reports =
      tradeoff_curve(family, config.detectors, config.thresholds,
                     config.theta_true, settings, config.seed, options);
  for (const MetricsReport& r : reports) {
    std::cout << "detector " << r.detector << "  A=" << fmt(r.threshold_a)
              << "  theta_true=" << fmt(r.theta_true) << "\n";
    std::cout << "  FAR  = " << fmt(r.far.far.value) << "  95% CI ["
              << fmt(r.far.far_ci.lo) << ", " << fmt(r.far.far_ci.hi) << "]"
              << "  E_inf[tau]=" << fmt(r.far.mean_tau.value) << " +- "
              << fmt(r.far.mean_tau.std_error)
              << "  censoring=" << fmt(r.far.censoring_rate);
    if (r.far.conservative) std::cout << " (lower-confidence bound)";
    std::cout << "\n";
    std::cout << "  CADD = " << fmt(r.cadd.max_delay.value) << " +- "
              << fmt(r.cadd.max_delay.std_error) << " at gamma="
              << r.cadd.argmax_gamma << "  curve:";
    for (const CaddPoint& p : r.cadd.curve) {
      std::cout << " (" << p.gamma << ", " << fmt(p.delay.value) << ")";
    }
    std::cout << "\n";
    std::cout << "  PDC  = " << fmt(r.pdc.pdc.value) << " ("
              << pdc_method_name(r.pdc.method) << ")";
    if (r.pdc.method != PdcMethod::kExact) {
      std::cout << "  95% CI [" << fmt(r.pdc.ci.lo) << ", " << fmt(r.pdc.ci.hi)
                << "]";
    }
    std::cout << "\n";
    if (r.wadd_gap_bound) {
      std::cout << "  delay-gap bound = " << fmt(*r.wadd_gap_bound) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential quickest change detection with observation control"};
  app.require_subcommand(1);

  CommonArgs check_args, curve_args, pdc_args, sim_args;
  std::string out_override;
  bool to_stdout = false;

  CLI::App* check = app.add_subcommand(
      "check-family", "verify the least-favorable-distribution assumption");
  add_common(check, &check_args);

  CLI::App* curve = app.add_subcommand(
      "curve", "delay / false-alarm / duty-cycle sweep, CSV output");
  add_common(curve, &curve_args);
  curve->add_option("--out", out_override, "output CSV path (overrides config)");
  curve->add_flag("--stdout", to_stdout, "also stream the CSV to stdout");

  CLI::App* pdc = app.add_subcommand(
      "pdc", "pre-change duty cycle estimators and the Wald bound");
  add_common(pdc, &pdc_args);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "full metrics report for every detector and threshold");
  add_common(simulate, &sim_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return run_check_family(check_args);
    if (curve->parsed()) return run_curve(curve_args, out_override, to_stdout);
    if (pdc->parsed()) return run_pdc(pdc_args);
    if (simulate->parsed()) return run_simulate(sim_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
