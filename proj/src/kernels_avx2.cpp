#include "qcd/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define QCD_HAVE_AVX2_TARGET 1
#endif

// AVX2 variants of the detector inner loops. Compiled with per-function
// target attributes so the translation unit itself needs no -mavx2; the
// dispatcher in kernels.cpp only routes here after a CPUID check. FMA is
// deliberately not enabled: every lane performs the same mul/add/max
// sequence as the scalar reference, so results compare exactly equal.
namespace qcd::kernels::avx2 {

#ifdef QCD_HAVE_AVX2_TARGET

bool supported() { return __builtin_cpu_supports("avx2"); }

__attribute__((target("avx2"))) void affine_llr(std::span<double> out,
                                                std::span<const double> slope,
                                                std::span<const double> intercept,
                                                double x) {
  assert(out.size() == slope.size() && out.size() == intercept.size());
  const std::size_t n = out.size();
  const __m256d vx = _mm256_set1_pd(x);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_loadu_pd(slope.data() + i);
    const __m256d b = _mm256_loadu_pd(intercept.data() + i);
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(_mm256_mul_pd(s, vx), b));
  }
  for (; i < n; ++i) out[i] = slope[i] * x + intercept[i];
}

__attribute__((target("avx2"))) double cusum_update(
    std::span<double> stats, std::span<const double> llr) {
  assert(stats.size() == llr.size());
  const std::size_t n = stats.size();
  const __m256d zero = _mm256_setzero_pd();
  __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d c = _mm256_loadu_pd(stats.data() + i);
    const __m256d z = _mm256_loadu_pd(llr.data() + i);
    const __m256d updated = _mm256_max_pd(zero, _mm256_add_pd(c, z));
    _mm256_storeu_pd(stats.data() + i, updated);
    vbest = _mm256_max_pd(vbest, updated);
  }
  double best = -std::numeric_limits<double>::infinity();
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vbest);
  for (double lane : lanes) best = std::max(best, lane);
  for (; i < n; ++i) {
    const double c = std::max(0.0, stats[i] + llr[i]);
    stats[i] = c;
    best = std::max(best, c);
  }
  return best;
}

__attribute__((target("avx2"))) void advance_hypotheses(
    std::span<double> sums, std::span<double> counts, double x) {
  assert(sums.size() == counts.size());
  const std::size_t n = sums.size();
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(sums.data() + i,
                     _mm256_add_pd(_mm256_loadu_pd(sums.data() + i), vx));
    _mm256_storeu_pd(counts.data() + i,
                     _mm256_add_pd(_mm256_loadu_pd(counts.data() + i), one));
  }
  for (; i < n; ++i) {
    sums[i] += x;
    counts[i] += 1.0;
  }
}

__attribute__((target("avx2"))) double gaussian_glr_max(
    std::span<const double> sums, std::span<const double> counts, double lo,
    double hi) {
  assert(sums.size() == counts.size());
  const std::size_t n = sums.size();
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_loadu_pd(sums.data() + i);
    const __m256d c = _mm256_loadu_pd(counts.data() + i);
    const __m256d mean = _mm256_div_pd(s, c);
    const __m256d th = _mm256_min_pd(_mm256_max_pd(mean, vlo), vhi);
    const __m256d half_sq = _mm256_mul_pd(half, _mm256_mul_pd(th, th));
    const __m256d value =
        _mm256_sub_pd(_mm256_mul_pd(th, s), _mm256_mul_pd(half_sq, c));
    vbest = _mm256_max_pd(vbest, value);
  }
  double best = -std::numeric_limits<double>::infinity();
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vbest);
  for (double lane : lanes) best = std::max(best, lane);
  for (; i < n; ++i) {
    const double mean = sums[i] / counts[i];
    const double th = std::min(std::max(mean, lo), hi);
    const double half_sq = 0.5 * (th * th);
    best = std::max(best, th * sums[i] - half_sq * counts[i]);
  }
  return best;
}

#else  // non-x86: dispatcher never routes here

bool supported() { return false; }

void affine_llr(std::span<double> out, std::span<const double> slope,
                std::span<const double> intercept, double x) {
  scalar::affine_llr(out, slope, intercept, x);
}
double cusum_update(std::span<double> stats, std::span<const double> llr) {
  return scalar::cusum_update(stats, llr);
}
void advance_hypotheses(std::span<double> sums, std::span<double> counts,
                        double x) {
  scalar::advance_hypotheses(sums, counts, x);
}
double gaussian_glr_max(std::span<const double> sums,
                        std::span<const double> counts, double lo, double hi) {
  return scalar::gaussian_glr_max(sums, counts, lo, hi);
}

#endif

}  // namespace qcd::kernels::avx2
