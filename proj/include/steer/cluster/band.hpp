#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "steer/cluster/topology.hpp"
#include "steer/heat/grid.hpp"
#include "steer/kernels/stencil.hpp"

namespace steer::cluster {

/// One rank's rows plus a ghost row on each side (rows + 2 local rows).
/// Ghost rows outside the grid are fixed zeros and never read by a sweep.
class Band {
 public:
  Band() = default;
  Band(std::size_t width, std::size_t height, RowBand rows, std::vector<double> values,
       std::vector<std::uint8_t> mask);
  static Band from_grid(const heat::Grid& g, RowBand rows);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  RowBand rows() const noexcept { return rows_; }

  std::span<const double> first_row() const { return local(1); }
  std::span<const double> last_row() const { return local(rows_.rows); }
  /// Throws DimensionError on a width mismatch.
  void set_ghost_above(std::span<const double> row);
  void set_ghost_below(std::span<const double> row);

  /// Local indices (1..rows) of the rows a sweep may touch: global border
  /// rows are never updated.
  std::size_t first_free() const noexcept { return rows_.start == 0 ? 2 : 1; }
  std::size_t last_free() const noexcept {
    return rows_.start + rows_.rows == height_ ? rows_.rows - 1 : rows_.rows;
  }

  /// Gauss-Seidel over local rows [from, to] clipped to the free rows, with
  /// whatever the neighbouring rows hold. Folds each row's max change into
  /// `residual`. Checks should_abort() before each row; false means it
  /// stopped early.
  template <class AbortCheck>
  bool sweep_rows(const kernels::StencilKernels& k, std::size_t from, std::size_t to,
                  double& residual, AbortCheck&& should_abort) {
    from = std::max(from, first_free());
    to = std::min(to, last_free());
    for (std::size_t i = from; i <= to; ++i) {
      if (should_abort()) return false;
      const double res = k.gs_row(&values_[i * width_], &values_[(i - 1) * width_],
                                  &values_[(i + 1) * width_], &mask_[i * width_], width_,
                                  scratch_.data());
      if (res > residual) residual = res;
    }
    return true;
  }

  /// Whole band with the ghost rows held fixed.
  template <class AbortCheck>
  bool sweep(const kernels::StencilKernels& k, double& residual, AbortCheck&& should_abort) {
    residual = 0.0;
    return sweep_rows(k, 1, rows_.rows, residual, should_abort);
  }

  /// Band rows without ghosts, row-major.
  std::vector<double> interior() const;
  /// Overwrites the band rows (not the ghosts); throws on a size mismatch.
  void restore(std::span<const double> rows);
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }

 private:
  std::span<const double> local(std::size_t i) const {
    return {values_.data() + i * width_, width_};
  }

  std::size_t width_ = 0, height_ = 0;
  RowBand rows_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> scratch_;
};

/// Copies band rows (no ghosts) into `g` at the band's position.
void write_rows(heat::Grid& g, RowBand rows, std::span<const double> values);

}  // namespace steer::cluster
