// AVX2 variants. This translation unit is the only one compiled with -mavx2;
// callers reach it through active_kernels() after a CPU check.

#include "steer/kernels/stencil.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace steer::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

inline double hmax(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return std::max(std::max(t[0], t[1]), std::max(t[2], t[3]));
}

inline double hsum(__m256d v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

double gs_row_avx2(double* row, const double* above, const double* below,
                   const std::uint8_t* fixed, std::size_t width, double* scratch) {
  if (width < 3) return 0.0;
  const std::size_t end = width - 1;  // exclusive
  // Everything except the left neighbour is known before the row starts:
  // above is final, below and right are still the previous sweep's values.
  std::size_t j = 1;
  for (; j + kLanes <= end; j += kLanes) {
    const __m256d up = _mm256_loadu_pd(above + j);
    const __m256d dn = _mm256_loadu_pd(below + j);
    const __m256d rt = _mm256_loadu_pd(row + j + 1);
    _mm256_storeu_pd(scratch + j, _mm256_add_pd(_mm256_add_pd(up, dn), rt));
  }
  for (; j < end; ++j) scratch[j] = (above[j] + below[j]) + row[j + 1];

  double residual = 0.0;
  double left = row[0];
  for (j = 1; j < end; ++j) {
    const double old = row[j];
    if (fixed[j]) {
      left = old;
      continue;
    }
    const double nv = 0.25 * (scratch[j] + left);
    row[j] = nv;
    residual = std::max(residual, std::fabs(nv - old));
    left = nv;
  }
  return residual;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_max_pd(acc, abs_pd(d));
  }
  double m = hmax(acc);
  for (; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline __m256d keep_mask(const std::uint8_t* skip) {
  std::uint32_t bytes;
  __builtin_memcpy(&bytes, skip, sizeof bytes);
  const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(static_cast<int>(bytes)));
  return _mm256_castsi256_pd(_mm256_cmpeq_epi64(wide, _mm256_setzero_si256()));
}

void sum_sq_diff_avx2(const double* a, const double* b, const std::uint8_t* skip, std::size_t n,
                      double* diff_sq, double* ref_sq) {
  __m256d d2 = _mm256_setzero_pd();
  __m256d r2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    __m256d d = _mm256_sub_pd(va, vb);
    __m256d dd = _mm256_mul_pd(d, d);
    __m256d bb = _mm256_mul_pd(vb, vb);
    if (skip) {
      const __m256d keep = keep_mask(skip + i);
      dd = _mm256_and_pd(dd, keep);
      bb = _mm256_and_pd(bb, keep);
    }
    d2 = _mm256_add_pd(d2, dd);
    r2 = _mm256_add_pd(r2, bb);
  }
  double sd = hsum(d2), sr = hsum(r2);
  for (; i < n; ++i) {
    if (skip && skip[i]) continue;
    const double d = a[i] - b[i];
    sd += d * d;
    sr += b[i] * b[i];
  }
  *diff_sq = sd;
  *ref_sq = sr;
}

void prolong_row_avx2(double* out, const double* lo, const double* hi, double weight_hi,
                      std::size_t cw) {
  if (cw == 0) return;
  const __m256d w = _mm256_set1_pd(weight_hi);
  const __m256d half = _mm256_set1_pd(0.5);
  auto v = [&](std::size_t j) { return lo[j] + weight_hi * (hi[j] - lo[j]); };
  std::size_t j = 0;
  // Needs v(j..j+4), so stop one short of the scalar tail.
  for (; j + kLanes + 1 <= cw; j += kLanes) {
    const __m256d l0 = _mm256_loadu_pd(lo + j), h0 = _mm256_loadu_pd(hi + j);
    const __m256d l1 = _mm256_loadu_pd(lo + j + 1), h1 = _mm256_loadu_pd(hi + j + 1);
    const __m256d a = _mm256_add_pd(l0, _mm256_mul_pd(w, _mm256_sub_pd(h0, l0)));
    const __m256d b = _mm256_add_pd(l1, _mm256_mul_pd(w, _mm256_sub_pd(h1, l1)));
    const __m256d mid = _mm256_add_pd(a, _mm256_mul_pd(half, _mm256_sub_pd(b, a)));
    const __m256d ul = _mm256_unpacklo_pd(a, mid);  // a0 m0 a2 m2
    const __m256d uh = _mm256_unpackhi_pd(a, mid);  // a1 m1 a3 m3
    _mm256_storeu_pd(out + 2 * j, _mm256_permute2f128_pd(ul, uh, 0x20));
    _mm256_storeu_pd(out + 2 * j + 4, _mm256_permute2f128_pd(ul, uh, 0x31));
  }
  for (; j + 1 < cw; ++j) {
    const double a = v(j);
    const double b = v(j + 1);
    out[2 * j] = a;
    out[2 * j + 1] = a + 0.5 * (b - a);
  }
  const double last = v(cw - 1);
  out[2 * cw - 2] = last;
  if (cw >= 2) {
    const double prev = v(cw - 2);
    out[2 * cw - 1] = prev + 1.5 * (last - prev);
  } else {
    out[2 * cw - 1] = last;
  }
}

}  // namespace

const StencilKernels* avx2_kernels() {
  static const StencilKernels k{"avx2", gs_row_avx2, max_abs_diff_avx2, sum_sq_diff_avx2,
                                prolong_row_avx2};
  return &k;
}

}  // namespace steer::kernels
