#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "steer/heat/grid.hpp"
#include "steer/kernels/stencil.hpp"

namespace steer::heat {

struct SolverConfig {
  std::uint64_t max_iter = 200000;
  double tolerance = 1e-3;  // max-norm of the per-sweep change
  void validate() const;
};

struct SolveResult {
  std::uint64_t iterations = 0;  // sweeps started, including an aborted one
  bool converged = false;
  bool aborted = false;
  double final_residual = std::numeric_limits<double>::infinity();
};

/// One row-major Gauss-Seidel sweep over the free interior cells.
/// Returns the max |change|; a grid with no free cells returns 0.
double gauss_seidel_sweep(Grid& g);
double gauss_seidel_sweep(Grid& g, const kernels::StencilKernels& k);

/// max over cells of |after - before|. Throws DimensionError on mismatch.
double residual_norm(const Grid& before, const Grid& after);

namespace detail {

/// Sweeps rows [first, last) of g, calling should_abort() before each row.
/// Returns false if it stopped early.
template <class AbortCheck>
bool sweep_rows(Grid& g, std::size_t first, std::size_t last, const kernels::StencilKernels& k,
                std::vector<double>& scratch, double& residual, AbortCheck& should_abort) {
  const std::size_t w = g.width();
  double* data = g.values().data();
  const std::uint8_t* mask = g.mask().data();
  for (std::size_t r = first; r < last; ++r) {
    if (should_abort()) return false;
    const double res = k.gs_row(data + r * w, data + (r - 1) * w, data + (r + 1) * w,
                                mask + r * w, w, scratch.data());
    if (res > residual) residual = res;
  }
  return true;
}

struct NoSweepHook {
  void operator()(std::uint64_t, double) const noexcept {}
};

}  // namespace detail

/// Runs sweeps until the residual drops to the tolerance, max_iter sweeps
/// have run, or should_abort() returns true. The abort check is consulted
/// once per row, so an abort returns within one row of progress and leaves
/// the partial state in the grid. on_sweep(iteration, residual) runs after
/// every completed sweep.
template <class AbortCheck, class SweepHook = detail::NoSweepHook>
SolveResult solve(Grid& g, const SolverConfig& cfg, AbortCheck&& should_abort,
                  SweepHook&& on_sweep = {},
                  const kernels::StencilKernels& k = kernels::active_kernels()) {
  cfg.validate();
  SolveResult out;
  std::vector<double> scratch(g.width());
  const std::size_t last = g.height() >= 2 ? g.height() - 1 : 0;
  while (out.iterations < cfg.max_iter) {
    ++out.iterations;
    double residual = 0.0;
    if (!detail::sweep_rows(g, 1, last, k, scratch, residual, should_abort)) {
      out.aborted = true;
      return out;
    }
    out.final_residual = residual;
    on_sweep(out.iterations, residual);
    if (residual <= cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace steer::heat
