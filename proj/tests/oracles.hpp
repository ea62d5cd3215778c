#pragma once

// Brute-force reference implementations used only by tests. Each recomputes
// detector trajectories from first principles (windowed maxima over every
// start index) in O(n^2) per stream, independent of the recursive
// implementations they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qcd/distributions.hpp"

namespace qcd::oracles {

// Finite-family GCuSum statistic: max(0, max over start k and member theta
// of the LLR partial sums), evaluated directly at every step.
inline std::vector<double> mcusum_statistics(std::span<const double> xs,
                                             const Density& pre,
                                             std::span<const Density> members) {
  std::vector<std::vector<double>> llrs(members.size());
  std::vector<double> stats;
  stats.reserve(xs.size());
  for (const double x : xs) {
    for (std::size_t m = 0; m < members.size(); ++m) {
      llrs[m].push_back(llr(members[m], pre, x));
    }
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t n = llrs[0].size();
    for (std::size_t m = 0; m < members.size(); ++m) {
      double suffix = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        suffix += llrs[m][k];
        best = std::max(best, suffix);
      }
    }
    stats.push_back(std::max(0.0, best));
  }
  return stats;
}

struct GdecusumOracleStep {
  bool sampled = false;
  double statistic = 0.0;
  double control_w = 0.0;
};

// Finite-family GDECuSum trajectory evaluated from the windowed-sum form:
// skipped steps contribute zero LLR (likelihood ratio equal to one), the
// control statistic W follows max(-h, windowed max) while sampling and the
// mu-ramp while skipping, and the stopping statistic is
// max(W, max over non-control members of their zero-padded CuSum sums).
// The control density must be the theta* member here (the form under test).
inline std::vector<GdecusumOracleStep> gdecusum_finite_trajectory(
    std::span<const double> xs, const Density& pre,
    std::span<const Density> members, std::size_t theta_star_index, double mu,
    double h) {
  const std::size_t m_count = members.size();
  std::vector<std::vector<double>> z(m_count);  // zero-padded LLR history
  std::vector<GdecusumOracleStep> out;
  double w_prev = 0.0;
  for (const double x : xs) {
    GdecusumOracleStep step;
    step.sampled = w_prev >= 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      z[m].push_back(step.sampled ? llr(members[m], pre, x) : 0.0);
    }
    const std::size_t n = z[0].size();
    if (step.sampled) {
      double best = -std::numeric_limits<double>::infinity();
      double suffix = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        suffix += z[theta_star_index][k];
        best = std::max(best, suffix);
      }
      step.control_w = std::max(-h, best);
    } else {
      step.control_w = std::min(0.0, w_prev + mu);
    }
    double detect = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < m_count; ++m) {
      if (m == theta_star_index) continue;
      double best = -std::numeric_limits<double>::infinity();
      double suffix = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        suffix += z[m][k];
        best = std::max(best, suffix);
      }
      detect = std::max(detect, std::max(0.0, best));
    }
    step.statistic = m_count == 1 ? step.control_w
                                  : std::max(step.control_w, detect);
    w_prev = step.control_w;
    out.push_back(step);
  }
  return out;
}

// Direct evaluation of sup over a dense theta grid of theta*sum - n*b(theta).
inline double glr_grid_sup(double sum, double count, const LogPartition& b,
                           double lo, double hi, std::size_t points = 100000) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= points; ++i) {
    const double th = lo + (hi - lo) * static_cast<double>(i) /
                               static_cast<double>(points);
    best = std::max(best, th * sum - count * b(th));
  }
  return best;
}

// Trapezoid quadrature of the KL integrand p(x) * (log p(x) - log q(x)).
inline double kl_by_quadrature(const Density& p, const Density& q, double lo,
                               double hi, std::size_t points = 20000) {
  const double step = (hi - lo) / static_cast<double>(points);
  double total = 0.0;
  for (std::size_t i = 0; i <= points; ++i) {
    const double x = lo + step * static_cast<double>(i);
    const double lp = p.log_density(x);
    const double value = std::exp(lp) * (lp - q.log_density(x));
    total += (i == 0 || i == points) ? 0.5 * value : value;
  }
  return total * step;
}

}  // namespace qcd::oracles
