#pragma once

#include <cstdint>
#include <vector>

#include "steer/heat/grid.hpp"
#include "steer/heat/scenario.hpp"
#include "steer/heat/solver.hpp"
#include "steer/hierarchy/levels.hpp"

namespace steer::hierarchy {

/// Fine -> coarse by injection: coarse(i, j) = fine(2i, 2j). The coarse
/// Dirichlet mask comes from rasterizing `scenario`, not from the fine mask.
heat::Grid restrict_to_coarse(const heat::Grid& fine, const heat::Scenario& scenario);

/// Coarse -> fine (exactly double in both dimensions) by bilinear
/// interpolation, extrapolating the last half cell linearly; fine Dirichlet
/// cells are then overwritten from `scenario`.
heat::Grid prolong(const heat::Grid& coarse, Dims fine, const heat::Scenario& scenario);

/// Repeated prolongation up to `finest`.
heat::Grid prolong_to(const heat::Grid& coarse, Dims finest, const heat::Scenario& scenario);

/// ||prolong_to_finest(coarse) - fine||_2 / ||fine||_2 over the free cells
/// of the fine grid. Throws DimensionError when the fine norm is zero.
double level_error(const heat::Grid& coarse, const heat::Grid& fine,
                   const heat::Scenario& scenario);

struct LevelSolve {
  Dims dims;
  heat::SolveResult result;
  heat::Grid solution;
};

/// Solves level 0 cold, then seeds each finer level with the prolonged
/// solution of the level below.
std::vector<LevelSolve> solve_cascade(const heat::Scenario& scenario, const LevelSpec& levels,
                                      const heat::SolverConfig& config);

}  // namespace steer::hierarchy
