#include "qcd/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace qcd::kernels {

namespace scalar {

void affine_llr(std::span<double> out, std::span<const double> slope,
                std::span<const double> intercept, double x) {
  assert(out.size() == slope.size() && out.size() == intercept.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = slope[i] * x + intercept[i];
  }
}

double cusum_update(std::span<double> stats, std::span<const double> llr) {
  assert(stats.size() == llr.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double c = std::max(0.0, stats[i] + llr[i]);
    stats[i] = c;
    best = std::max(best, c);
  }
  return best;
}

void advance_hypotheses(std::span<double> sums, std::span<double> counts,
                        double x) {
  assert(sums.size() == counts.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    sums[i] += x;
    counts[i] += 1.0;
  }
}

double gaussian_glr_max(std::span<const double> sums,
                        std::span<const double> counts, double lo, double hi) {
  assert(sums.size() == counts.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double mean = sums[i] / counts[i];
    const double th = std::min(std::max(mean, lo), hi);
    const double half_sq = 0.5 * (th * th);
    const double value = th * sums[i] - half_sq * counts[i];
    best = std::max(best, value);
  }
  return best;
}

}  // namespace scalar

namespace {

struct Dispatch {
  void (*affine_llr)(std::span<double>, std::span<const double>,
                     std::span<const double>, double);
  double (*cusum_update)(std::span<double>, std::span<const double>);
  void (*advance_hypotheses)(std::span<double>, std::span<double>, double);
  double (*gaussian_glr_max)(std::span<const double>, std::span<const double>,
                             double, double);
  std::string_view isa;
};

Dispatch resolve() {
  if (avx2::supported()) {
    return {&avx2::affine_llr, &avx2::cusum_update, &avx2::advance_hypotheses,
            &avx2::gaussian_glr_max, "avx2"};
  }
  return {&scalar::affine_llr, &scalar::cusum_update,
          &scalar::advance_hypotheses, &scalar::gaussian_glr_max, "scalar"};
}

const Dispatch& table() {
  static const Dispatch d = resolve();
  return d;
}

}  // namespace

void affine_llr(std::span<double> out, std::span<const double> slope,
                std::span<const double> intercept, double x) {
  table().affine_llr(out, slope, intercept, x);
}

double cusum_update(std::span<double> stats, std::span<const double> llr) {
  return table().cusum_update(stats, llr);
}

void advance_hypotheses(std::span<double> sums, std::span<double> counts,
                        double x) {
  table().advance_hypotheses(sums, counts, x);
}

double gaussian_glr_max(std::span<const double> sums,
                        std::span<const double> counts, double lo, double hi) {
  return table().gaussian_glr_max(sums, counts, lo, hi);
}

std::string_view active_isa() { return table().isa; }

}  // namespace qcd::kernels
