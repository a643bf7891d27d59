#include "steer/kernels/stencil.hpp"

#include <algorithm>
#include <cmath>

namespace steer::kernels {
namespace {

double gs_row_scalar(double* row, const double* above, const double* below,
                     const std::uint8_t* fixed, std::size_t width, double* /*scratch*/) {
  if (width < 3) return 0.0;
  double residual = 0.0;
  double left = row[0];
  for (std::size_t j = 1; j + 1 < width; ++j) {
    const double old = row[j];
    if (fixed[j]) {
      left = old;
      continue;
    }
    // Same association as the SIMD variant: (up + down) + right, then + left.
    const double nv = 0.25 * (((above[j] + below[j]) + row[j + 1]) + left);
    row[j] = nv;
    residual = std::max(residual, std::fabs(nv - old));
    left = nv;
  }
  return residual;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void sum_sq_diff_scalar(const double* a, const double* b, const std::uint8_t* skip,
                        std::size_t n, double* diff_sq, double* ref_sq) {
  double d2 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (skip && skip[i]) continue;
    const double d = a[i] - b[i];
    d2 += d * d;
    r2 += b[i] * b[i];
  }
  *diff_sq = d2;
  *ref_sq = r2;
}

void prolong_row_scalar(double* out, const double* lo, const double* hi, double weight_hi,
                        std::size_t cw) {
  if (cw == 0) return;
  auto v = [&](std::size_t j) { return lo[j] + weight_hi * (hi[j] - lo[j]); };
  for (std::size_t j = 0; j + 1 < cw; ++j) {
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

const StencilKernels& scalar_kernels() {
  static const StencilKernels k{"scalar", gs_row_scalar, max_abs_diff_scalar, sum_sq_diff_scalar,
                                prolong_row_scalar};
  return k;
}

}  // namespace steer::kernels
