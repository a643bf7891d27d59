#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace steer::heat {

/// 2D temperature field, row-major, with a Dirichlet mask.
///
/// Border cells are always fixed. Fixed cells are never written by a sweep.
class Grid {
 public:
  Grid() = default;
  /// All cells zero; the outer rectangle is fixed at `border_value`.
  Grid(std::size_t width, std::size_t height, double border_value = 0.0);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::size_t r, std::size_t c) const { return values_[r * width_ + c]; }
  bool fixed(std::size_t r, std::size_t c) const { return mask_[r * width_ + c] != 0; }

  /// Sets a free cell's value. Throws on a fixed cell or a non-finite value.
  void set(std::size_t r, std::size_t c, double v);
  /// Pins a cell to a Dirichlet value.
  void fix(std::size_t r, std::size_t c, double v);
  bool is_border(std::size_t r, std::size_t c) const noexcept {
    return r == 0 || c == 0 || r + 1 == height_ || c + 1 == width_;
  }

  std::span<double> row(std::size_t r) { return {values_.data() + r * width_, width_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * width_, width_}; }
  std::span<const std::uint8_t> mask_row(std::size_t r) const {
    return {mask_.data() + r * width_, width_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

  std::size_t fixed_count() const noexcept;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace steer::heat
