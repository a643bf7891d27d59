#pragma once
// Row kernels for the five-point Laplace stencil and grid transfer.
//
// Every kernel has a scalar reference implementation and, where the build
// and CPU allow it, an AVX2 variant. Variants are bitwise interchangeable
// for everything except the floating-point sums in sum_sq_diff, whose lane
// order differs; equivalence tests compare those to a relative tolerance.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace steer::kernels {

struct StencilKernels {
  std::string_view name;

  // One Gauss-Seidel pass over row[1 .. width-2], left to right, in place.
  // `above` already holds this sweep's values, `below` the previous sweep's.
  // Cells with fixed[j] != 0 are left untouched; row[0] and row[width-1]
  // are never written. `scratch` must hold `width` doubles. Returns the
  // largest |new - old| over the updated cells.
  double (*gs_row)(double* row, const double* above, const double* below,
                   const std::uint8_t* fixed, std::size_t width, double* scratch);

  // max_i |a[i] - b[i]|
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);

  // sum over i with skip[i] == 0 of (a[i] - b[i])^2, and of b[i]^2
  void (*sum_sq_diff)(const double* a, const double* b, const std::uint8_t* skip,
                      std::size_t n, double* diff_sq, double* ref_sq);

  // Bilinear 2:1 column interpolation of one coarse row pair into a fine
  // row: lo/hi are coarse rows, weight_hi in {0, 0.5, 1.5 (extrapolate)}.
  // out has 2*coarse_width entries.
  void (*prolong_row)(double* out, const double* lo, const double* hi, double weight_hi,
                      std::size_t coarse_width);
};

const StencilKernels& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled in.
const StencilKernels* avx2_kernels();

/// True when the running CPU can execute the AVX2 variant.
bool cpu_has_avx2();

/// The kernel set chosen at startup: AVX2 when compiled and supported, else
/// scalar. STEER_KERNELS=scalar in the environment forces the reference path.
const StencilKernels& active_kernels();

}  // namespace steer::kernels
