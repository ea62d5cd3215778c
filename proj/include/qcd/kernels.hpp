#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops of the detectors, in two equivalence-tested
// flavours: a scalar reference implementation and an AVX2 variant selected
// once at startup via CPUID. Both paths use the same IEEE operation order
// per element (no FMA contraction), so their results compare exactly equal
// (identical up to the sign of zero); the test suite asserts this.
namespace qcd::kernels {

namespace scalar {

// out[i] = slope[i] * x + intercept[i]
void affine_llr(std::span<double> out, std::span<const double> slope,
                std::span<const double> intercept, double x);

// stats[i] = max(0, stats[i] + llr[i]); returns max over updated stats
// (-inf for empty spans).
double cusum_update(std::span<double> stats, std::span<const double> llr);

// sums[i] += x; counts[i] += 1
void advance_hypotheses(std::span<double> sums, std::span<double> counts,
                        double x);

// Per-hypothesis GLR value for the unit-variance Gaussian log partition
// b(theta) = theta^2/2: value_i = th*sums[i] - 0.5*th^2*counts[i] with
// th = clamp(sums[i]/counts[i], lo, hi). Returns max over hypotheses
// (-inf for empty spans).
double gaussian_glr_max(std::span<const double> sums,
                        std::span<const double> counts, double lo, double hi);

}  // namespace scalar

namespace avx2 {

bool supported();

void affine_llr(std::span<double> out, std::span<const double> slope,
                std::span<const double> intercept, double x);
double cusum_update(std::span<double> stats, std::span<const double> llr);
void advance_hypotheses(std::span<double> sums, std::span<double> counts,
                        double x);
double gaussian_glr_max(std::span<const double> sums,
                        std::span<const double> counts, double lo, double hi);

}  // namespace avx2

// Dispatched entry points (resolved once, at first use).
void affine_llr(std::span<double> out, std::span<const double> slope,
                std::span<const double> intercept, double x);
double cusum_update(std::span<double> stats, std::span<const double> llr);
void advance_hypotheses(std::span<double> sums, std::span<double> counts,
                        double x);
double gaussian_glr_max(std::span<const double> sums,
                        std::span<const double> counts, double lo, double hi);

// Name of the ISA the dispatched entry points resolved to ("avx2"/"scalar").
std::string_view active_isa();

}  // namespace qcd::kernels
