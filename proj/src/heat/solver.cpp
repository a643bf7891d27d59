#include "steer/heat/solver.hpp"

#include <cmath>

#include "steer/error.hpp"

namespace steer::heat {

void SolverConfig::validate() const {
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    throw ConfigError("tolerance must be a positive finite number");
  }
}

double gauss_seidel_sweep(Grid& g, const kernels::StencilKernels& k) {
  std::vector<double> scratch(g.width());
  double residual = 0.0;
  auto never = [] { return false; };
  const std::size_t last = g.height() >= 2 ? g.height() - 1 : 0;
  detail::sweep_rows(g, 1, last, k, scratch, residual, never);
  return residual;
}

double gauss_seidel_sweep(Grid& g) { return gauss_seidel_sweep(g, kernels::active_kernels()); }

double residual_norm(const Grid& before, const Grid& after) {
  if (before.width() != after.width() || before.height() != after.height()) {
    throw DimensionError("residual_norm: grids differ in size");
  }
  return kernels::active_kernels().max_abs_diff(before.values().data(), after.values().data(),
                                                before.size());
}

}  // namespace steer::heat
