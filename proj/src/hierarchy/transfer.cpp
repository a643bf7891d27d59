#include "steer/hierarchy/transfer.hpp"

#include <cmath>

#include "steer/error.hpp"
#include "steer/kernels/stencil.hpp"

namespace steer::hierarchy {

heat::Grid restrict_to_coarse(const heat::Grid& fine, const heat::Scenario& scenario) {
  if (fine.width() % 2 != 0 || fine.height() % 2 != 0 || fine.width() < 2 || fine.height() < 2) {
    throw DimensionError("restrict: fine grid dimensions must be even");
  }
  const std::size_t cw = fine.width() / 2, ch = fine.height() / 2;
  heat::Grid coarse = heat::rasterize(scenario, cw, ch);
  for (std::size_t r = 0; r < ch; ++r) {
    for (std::size_t c = 0; c < cw; ++c) {
      if (!coarse.fixed(r, c)) coarse.set(r, c, fine.at(2 * r, 2 * c));
    }
  }
  return coarse;
}

heat::Grid prolong(const heat::Grid& coarse, Dims fine_dims, const heat::Scenario& scenario) {
  if (fine_dims.width != 2 * coarse.width() || fine_dims.height != 2 * coarse.height()) {
    throw DimensionError("prolong: fine dimensions must be exactly double the coarse ones");
  }
  const auto& k = kernels::active_kernels();
  const std::size_t cw = coarse.width(), ch = coarse.height();
  std::vector<double> interp(fine_dims.width * fine_dims.height);
  for (std::size_t fr = 0; fr < fine_dims.height; ++fr) {
    const std::size_t i = fr / 2;
    const double* lo;
    const double* hi;
    double weight;
    if (fr % 2 == 0) {
      lo = hi = coarse.row(i).data();
      weight = 0.0;
    } else if (i + 1 < ch) {
      lo = coarse.row(i).data();
      hi = coarse.row(i + 1).data();
      weight = 0.5;
    } else if (ch >= 2) {
      lo = coarse.row(i - 1).data();
      hi = coarse.row(i).data();
      weight = 1.5;
    } else {
      lo = hi = coarse.row(i).data();
      weight = 0.0;
    }
    k.prolong_row(interp.data() + fr * fine_dims.width, lo, hi, weight, cw);
  }
  heat::Grid fine = heat::rasterize(scenario, fine_dims.width, fine_dims.height);
  for (std::size_t r = 0; r < fine_dims.height; ++r) {
    for (std::size_t c = 0; c < fine_dims.width; ++c) {
      if (!fine.fixed(r, c)) fine.set(r, c, interp[r * fine_dims.width + c]);
    }
  }
  return fine;
}

heat::Grid prolong_to(const heat::Grid& coarse, Dims finest, const heat::Scenario& scenario) {
  heat::Grid g = coarse;
  while (g.width() < finest.width || g.height() < finest.height) {
    g = prolong(g, {2 * g.width(), 2 * g.height()}, scenario);
  }
  if (g.width() != finest.width || g.height() != finest.height) {
    throw DimensionError("prolong_to: target is not a power-of-two refinement of the source");
  }
  return g;
}

double level_error(const heat::Grid& coarse, const heat::Grid& fine,
                   const heat::Scenario& scenario) {
  const heat::Grid lifted = prolong_to(coarse, {fine.width(), fine.height()}, scenario);
  double diff_sq = 0.0, ref_sq = 0.0;
  kernels::active_kernels().sum_sq_diff(lifted.values().data(), fine.values().data(),
                                        fine.mask().data(), fine.size(), &diff_sq, &ref_sq);
  if (!(ref_sq > 0.0)) throw DimensionError("level_error: fine solution has zero norm");
  return std::sqrt(diff_sq / ref_sq);
}

std::vector<LevelSolve> solve_cascade(const heat::Scenario& scenario, const LevelSpec& levels,
                                      const heat::SolverConfig& config) {
  std::vector<LevelSolve> out;
  for (std::size_t i = 0; i < levels.count(); ++i) {
    const Dims d = levels.at(i);
    heat::Grid g = i == 0 ? heat::rasterize(scenario, d.width, d.height)
                          : prolong(out.back().solution, d, scenario);
    auto result = heat::solve(g, config, [] { return false; });
    out.push_back({d, result, std::move(g)});
  }
  return out;
}

}  // namespace steer::hierarchy
