#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "qcd/simulation.hpp"

namespace qcd {

// One CSV row per (detector, threshold); schema pinned by kCsvHeader.
struct CsvRow {
  std::string detector;
  double theta_true = 0.0;
  double a = 0.0;
  double far_hat = 0.0;
  double far_ci_lo = 0.0;
  double far_ci_hi = 0.0;
  double cadd_hat = 0.0;
  double cadd_se = 0.0;
  double pdc_hat = 0.0;
  std::string pdc_method;
  std::uint64_t trials = 0;
  double censoring_rate = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kCsvHeader =
    "detector,theta_true,A,far_hat,far_ci_lo,far_ci_hi,cadd_hat,cadd_se,"
    "pdc_hat,pdc_method,trials,censoring_rate,seed";

CsvRow row_from_report(const MetricsReport& report);

// Header plus one line per row, 6 significant digits, LF line endings.
std::string format_csv(std::span<const CsvRow> rows);

}  // namespace qcd
