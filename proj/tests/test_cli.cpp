#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "qcd/config.hpp"
#include "qcd/csv.hpp"
#include "qcd/errors.hpp"

using namespace qcd;

namespace {

std::string workdir() {
  const char* dir = std::getenv("QCD_WORKDIR");
  return dir ? dir : ".";
}

std::string cli_path() {
  const char* path = std::getenv("QCD_CLI");
  return path ? path : "";
}

struct CliResult {
  int exit_code = -1;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  const std::string out_file = workdir() + "/cli_stdout.txt";
  const std::string command =
      cli_path() + " " + args + " > " + out_file + " 2>/dev/null";
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(out_file, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  result.stdout_text = buffer.str();
  return result;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ExperimentConfig sample_config() {
  ExperimentConfig config;
  config.family.type = FamilyConfig::Type::kGaussianFinite;
  config.family.thetas = {0.4, 0.6, 0.8, 1.0};
  config.family.theta_star = 0.4;
  config.theta_true = 0.6;
  DetectorSpec gc{DetectorKind::kGcusum, {}, "gcusum"};
  config.detectors.push_back(gc);
  DetectorSpec gd{DetectorKind::kGdecusum, {}, "gdecusum"};
  gd.params.mu = 0.08;
  gd.params.h = std::numeric_limits<double>::infinity();
  config.detectors.push_back(gd);
  config.thresholds = {2.0, 3.0};
  config.trials = 150;
  config.cadd_trials = 120;
  config.pdc_cycles = 400;
  config.horizon = 3000;
  config.gamma_grid = {1, 5};
  config.seed = 7;
  config.output = workdir() + "/out.csv";
  return config;
}

}  // namespace

TEST_CASE("config round-trips through JSON") {
  ExperimentConfig config = sample_config();
  CHECK(parse_config(serialize_config(config)) == config);

  // Exponential-family variant with a control override and Bernoulli pattern.
  ExperimentConfig expfam = sample_config();
  expfam.family.type = FamilyConfig::Type::kGaussianExpfam;
  expfam.family.thetas.clear();
  expfam.family.theta_lower = 0.2;
  expfam.family.theta_upper = 1.0;
  expfam.family.epsilon = 0.05;
  expfam.family.theta_star = 0.2;
  expfam.family.control_mean = 0.3;
  expfam.detectors.clear();
  DetectorSpec frac{DetectorKind::kFractional, {}, "frac"};
  frac.params.skip_pattern = SkipPattern{SkipPattern::Kind::kBernoulli, 0.25};
  frac.params.window = 40;
  expfam.detectors.push_back(frac);
  DetectorSpec cu{DetectorKind::kCusum, {}, "cusum"};
  cu.params.design_theta = 0.6;
  expfam.detectors.push_back(cu);
  CHECK(parse_config(serialize_config(expfam)) == expfam);
}

TEST_CASE("config validation diagnostics") {
  const ExperimentConfig base = sample_config();

  const std::string missing_star = R"({
    "family": {"type": "gaussian_finite", "thetas": [0.4, 0.6]},
    "theta_true": 0.6,
    "detectors": [{"type": "gcusum"}],
    "thresholds": [2.0]
  })";
  CHECK_THROWS_AS(parse_config(missing_star), ConfigError);

  ExperimentConfig bad = base;
  bad.thresholds = {3.0, 2.0};
  CHECK_THROWS_AS(parse_config(serialize_config(bad)), ConfigError);

  bad = base;
  bad.theta_true = 0.5;  // not a family member
  CHECK_THROWS_AS(parse_config(serialize_config(bad)), ConfigError);

  bad = base;
  bad.detectors.clear();
  CHECK_THROWS_AS(parse_config(serialize_config(bad)), ConfigError);

  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"unknown_key": 1})"), ConfigError);
}

TEST_CASE("csv schema and formatting") {
  CHECK(kCsvHeader ==
        "detector,theta_true,A,far_hat,far_ci_lo,far_ci_hi,cadd_hat,cadd_se,"
        "pdc_hat,pdc_method,trials,censoring_rate,seed");
  CsvRow row;
  row.detector = "gcusum";
  row.theta_true = 0.6;
  row.a = 4.0;
  row.far_hat = 0.000123456789;
  row.far_ci_lo = 0.0001;
  row.far_ci_hi = 0.0002;
  row.cadd_hat = 25.123456789;
  row.cadd_se = 0.5;
  row.pdc_hat = 1.0;
  row.pdc_method = "exact";
  row.trials = 20000;
  row.censoring_rate = 0.0;
  row.seed = 7;
  const std::string text = format_csv(std::vector<CsvRow>{row});
  CHECK(text ==
        "detector,theta_true,A,far_hat,far_ci_lo,far_ci_hi,cadd_hat,cadd_se,"
        "pdc_hat,pdc_method,trials,censoring_rate,seed\n"
        "gcusum,0.6,4,0.000123457,0.0001,0.0002,25.1235,0.5,1,exact,20000,0,7\n");
}

TEST_CASE("cli end-to-end") {
  REQUIRE_FALSE(cli_path().empty());
  const std::string config_path = workdir() + "/config.json";

  SUBCASE("check-family verdicts and exit codes") {
    ExperimentConfig config = sample_config();
    write_file(config_path, serialize_config(config));
    CliResult r = run_cli("check-family --config " + config_path);
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("HOLDS") != std::string::npos);

    config.family.theta_star = 1.0;  // drift at theta=0.4 is -0.1
    write_file(config_path, serialize_config(config));
    r = run_cli("check-family --config " + config_path);
    CHECK(r.exit_code == 2);
    CHECK(r.stdout_text.find("VIOLATED") != std::string::npos);

    write_file(config_path, "{\"family\": {\"type\": \"gaussian_finite\"}}");
    r = run_cli("check-family --config " + config_path);
    CHECK(r.exit_code == 1);
  }

  SUBCASE("curve writes a stable CSV") {
    ExperimentConfig config = sample_config();
    config.detectors.resize(1);
    config.thresholds = {2.0};
    write_file(config_path, serialize_config(config));
    const std::string out = workdir() + "/single.csv";
    CliResult r = run_cli("curve --config " + config_path + " --out " + out);
    CHECK(r.exit_code == 0);
    const std::string first = read_file(out);
    // header + exactly one row
    CHECK(std::count(first.begin(), first.end(), '\n') == 2);
    CHECK(first.rfind("detector,", 0) == 0);

    r = run_cli("curve --config " + config_path + " --out " + out);
    CHECK(r.exit_code == 0);
    CHECK(read_file(out) == first);  // byte-identical rerun

    r = run_cli("curve --config " + config_path + " --out " + out + " --stdout");
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text == first);
  }

  SUBCASE("pdc reports both estimators and the Wald bound") {
    ExperimentConfig config = sample_config();
    config.horizon = 10000;
    write_file(config_path, serialize_config(config));
    CliResult r = run_cli("pdc --config " + config_path);
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("renewal-reward PDC") != std::string::npos);
    CHECK(r.stdout_text.find("long-run PDC") != std::string::npos);
    // mu = 0.08 against theta* = 0.4: bound 0.08 / (0.08 + 0.08) = 0.5
    CHECK(r.stdout_text.find("0.500000") != std::string::npos);

    config.detectors.resize(1);  // gcusum only: duty cycle identically 1
    write_file(config_path, serialize_config(config));
    r = run_cli("pdc --config " + config_path);
    CHECK(r.exit_code == 2);
    CHECK(r.stdout_text.find("identically 1") != std::string::npos);
  }
}
