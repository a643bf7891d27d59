#include "steer/cluster/band.hpp"

#include <algorithm>

#include "steer/error.hpp"

namespace steer::cluster {

Band::Band(std::size_t width, std::size_t height, RowBand rows, std::vector<double> values,
           std::vector<std::uint8_t> mask)
    : width_(width), height_(height), rows_(rows), values_(std::move(values)),
      mask_(std::move(mask)), scratch_(width) {
  const std::size_t area = (rows.rows + 2) * width;
  if (values_.size() != area || mask_.size() != area || rows.rows == 0 ||
      rows.start + rows.rows > height) {
    throw DimensionError("band payload does not match its dimensions");
  }
}

Band Band::from_grid(const heat::Grid& g, RowBand rows) {
  const std::size_t w = g.width();
  std::vector<double> values((rows.rows + 2) * w, 0.0);
  std::vector<std::uint8_t> mask((rows.rows + 2) * w, 1);
  for (std::size_t i = 0; i < rows.rows + 2; ++i) {
    const auto r = static_cast<std::ptrdiff_t>(rows.start + i) - 1;
    if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.height())) continue;
    const auto src = g.row(static_cast<std::size_t>(r));
    std::copy(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>(i * w));
    const auto m = g.mask_row(static_cast<std::size_t>(r));
    std::copy(m.begin(), m.end(), mask.begin() + static_cast<std::ptrdiff_t>(i * w));
  }
  return Band(w, g.height(), rows, std::move(values), std::move(mask));
}

void Band::set_ghost_above(std::span<const double> row) {
  if (row.size() != width_) throw DimensionError("ghost row width mismatch");
  std::copy(row.begin(), row.end(), values_.begin());
}

void Band::set_ghost_below(std::span<const double> row) {
  if (row.size() != width_) throw DimensionError("ghost row width mismatch");
  std::copy(row.begin(), row.end(),
            values_.begin() + static_cast<std::ptrdiff_t>((rows_.rows + 1) * width_));
}

std::vector<double> Band::interior() const {
  return {values_.begin() + static_cast<std::ptrdiff_t>(width_),
          values_.begin() + static_cast<std::ptrdiff_t>((rows_.rows + 1) * width_)};
}

void Band::restore(std::span<const double> rows) {
  if (rows.size() != rows_.rows * width_) throw DimensionError("band snapshot size mismatch");
  std::copy(rows.begin(), rows.end(), values_.begin() + static_cast<std::ptrdiff_t>(width_));
}

void write_rows(heat::Grid& g, RowBand rows, std::span<const double> values) {
  if (values.size() != rows.rows * g.width() || rows.start + rows.rows > g.height()) {
    throw DimensionError("band rows do not fit the grid");
  }
  std::copy(values.begin(), values.end(),
            g.values().begin() + static_cast<std::ptrdiff_t>(rows.start * g.width()));
}

}  // namespace steer::cluster
