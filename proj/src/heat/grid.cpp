#include "steer/heat/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "steer/error.hpp"

namespace steer::heat {

Grid::Grid(std::size_t width, std::size_t height, double border_value)
    : width_(width), height_(height), values_(width * height, 0.0), mask_(width * height, 0) {
  if (width == 0 || height == 0) throw DimensionError("grid dimensions must be positive");
  if (!std::isfinite(border_value)) throw DimensionError("border value must be finite");
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (is_border(r, c)) {
        values_[r * width + c] = border_value;
        mask_[r * width + c] = 1;
      }
    }
  }
}

void Grid::set(std::size_t r, std::size_t c, double v) {
  const std::size_t i = r * width_ + c;
  if (mask_.at(i)) throw DimensionError("cannot overwrite a fixed cell");
  if (!std::isfinite(v)) throw DimensionError("cell values must be finite");
  values_[i] = v;
}

void Grid::fix(std::size_t r, std::size_t c, double v) {
  if (r >= height_ || c >= width_) {
    throw DimensionError("cell (" + std::to_string(r) + "," + std::to_string(c) + ") out of range");
  }
  if (!std::isfinite(v)) throw DimensionError("cell values must be finite");
  values_[r * width_ + c] = v;
  mask_[r * width_ + c] = 1;
}

std::size_t Grid::fixed_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

}  // namespace steer::heat
