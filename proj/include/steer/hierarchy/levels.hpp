#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace steer::hierarchy {

using Clock = std::chrono::steady_clock;

struct Dims {
  std::size_t width = 0;
  std::size_t height = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Grid resolutions ordered coarsest to finest; each level doubles both
/// dimensions of the one before it.
class LevelSpec {
 public:
  LevelSpec();  // 75x75, 150x150, 300x300
  explicit LevelSpec(std::vector<Dims> resolutions);

  std::size_t count() const noexcept { return levels_.size(); }
  std::size_t finest() const noexcept { return levels_.size() - 1; }
  const Dims& at(std::size_t i) const { return levels_.at(i); }
  const std::vector<Dims>& resolutions() const noexcept { return levels_; }

  /// "75x75,150x150,300x300"
  static LevelSpec parse(std::string_view text);
  std::string to_string() const;

 private:
  std::vector<Dims> levels_;
};

/// Timestamps of the most recent user updates (ring buffer of 8).
class InteractionClock {
 public:
  static constexpr std::size_t kCapacity = 8;

  /// Throws ConfigError if t precedes the latest recorded stamp.
  void record(Clock::time_point t);
  std::size_t size() const noexcept { return size_; }
  std::optional<Clock::time_point> last() const;
  /// Median gap between consecutive recorded stamps; empty with < 2 stamps.
  std::optional<Clock::duration> median_gap() const;

 private:
  std::array<Clock::time_point, kCapacity> stamps_{};
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

struct LevelPolicy {
  Clock::duration tau_fast = std::chrono::milliseconds(500);
  Clock::duration tau_idle = std::chrono::seconds(2);
  void validate() const;
};

/// Picks the grid level for the next epoch. Idle for tau_idle promotes one
/// level; a median update gap below tau_fast drops straight to the coarsest;
/// otherwise the level stays.
std::size_t choose_level(const InteractionClock& clock, const LevelPolicy& policy,
                         std::size_t current, std::size_t level_count, Clock::time_point now);

}  // namespace steer::hierarchy
