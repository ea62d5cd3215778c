#include "qcd/csv.hpp"

#include <cstdio>

namespace qcd {

namespace {

std::string format_real(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

}  // namespace

CsvRow row_from_report(const MetricsReport& report) {
  CsvRow row;
  row.detector = report.detector;
  row.theta_true = report.theta_true;
  row.a = report.threshold_a;
  row.far_hat = report.far.far.value;
  row.far_ci_lo = report.far.far_ci.lo;
  row.far_ci_hi = report.far.far_ci.hi;
  row.cadd_hat = report.cadd.max_delay.value;
  row.cadd_se = report.cadd.max_delay.std_error;
  row.pdc_hat = report.pdc.pdc.value;
  row.pdc_method = std::string(pdc_method_name(report.pdc.method));
  row.trials = report.far.trials;
  row.censoring_rate = report.far.censoring_rate;
  row.seed = report.seed;
  return row;
}

std::string format_csv(std::span<const CsvRow> rows) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const CsvRow& row : rows) {
    out += row.detector;
    out.push_back(',');
    out += format_real(row.theta_true);
    out.push_back(',');
    out += format_real(row.a);
    out.push_back(',');
    out += format_real(row.far_hat);
    out.push_back(',');
    out += format_real(row.far_ci_lo);
    out.push_back(',');
    out += format_real(row.far_ci_hi);
    out.push_back(',');
    out += format_real(row.cadd_hat);
    out.push_back(',');
    out += format_real(row.cadd_se);
    out.push_back(',');
    out += format_real(row.pdc_hat);
    out.push_back(',');
    out += row.pdc_method;
    out.push_back(',');
    out += std::to_string(row.trials);
    out.push_back(',');
    out += format_real(row.censoring_rate);
    out.push_back(',');
    out += std::to_string(row.seed);
    out.push_back('\n');
  }
  return out;
}

}  // namespace qcd
