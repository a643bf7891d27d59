#include "steer/hierarchy/levels.hpp"

#include <algorithm>
#include <sstream>

#include "steer/error.hpp"

namespace steer::hierarchy {

LevelSpec::LevelSpec() : LevelSpec({{75, 75}, {150, 150}, {300, 300}}) {}

LevelSpec::LevelSpec(std::vector<Dims> resolutions) : levels_(std::move(resolutions)) {
  if (levels_.empty()) throw ConfigError("level spec needs at least one resolution");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].width < 1 || levels_[i].height < 1) {
      throw ConfigError("level resolutions must be positive");
    }
    if (i > 0 && (levels_[i].width != 2 * levels_[i - 1].width ||
                  levels_[i].height != 2 * levels_[i - 1].height)) {
      throw ConfigError("each finer level must exactly double its predecessor (level " +
                        std::to_string(i) + ")");
    }
  }
}

LevelSpec LevelSpec::parse(std::string_view text) {
  std::vector<Dims> dims;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto x = item.find('x');
    try {
      if (x == std::string::npos) throw ConfigError("");
      dims.push_back({std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1))});
    } catch (const std::exception&) {
      throw ConfigError("bad level resolution `" + item + "` (want WxH)");
    }
  }
  return LevelSpec(std::move(dims));
}

std::string LevelSpec::to_string() const {
  std::string out;
  for (const auto& d : levels_) {
    if (!out.empty()) out += ',';
    out += std::to_string(d.width) + "x" + std::to_string(d.height);
  }
  return out;
}

void InteractionClock::record(Clock::time_point t) {
  if (auto prev = last(); prev && t < *prev) {
    throw ConfigError("interaction timestamps must be non-decreasing");
  }
  stamps_[head_] = t;
  head_ = (head_ + 1) % kCapacity;
  size_ = std::min(size_ + 1, kCapacity);
}

std::optional<Clock::time_point> InteractionClock::last() const {
  if (size_ == 0) return std::nullopt;
  return stamps_[(head_ + kCapacity - 1) % kCapacity];
}

std::optional<Clock::duration> InteractionClock::median_gap() const {
  if (size_ < 2) return std::nullopt;
  std::vector<Clock::duration> gaps;
  const std::size_t oldest = (head_ + kCapacity - size_) % kCapacity;
  for (std::size_t i = 1; i < size_; ++i) {
    gaps.push_back(stamps_[(oldest + i) % kCapacity] - stamps_[(oldest + i - 1) % kCapacity]);
  }
  std::sort(gaps.begin(), gaps.end());
  const std::size_t mid = gaps.size() / 2;
  if (gaps.size() % 2 == 1) return gaps[mid];
  return (gaps[mid - 1] + gaps[mid]) / 2;
}

void LevelPolicy::validate() const {
  if (!(tau_fast > Clock::duration::zero()) || !(tau_idle > tau_fast)) {
    throw ConfigError("level policy needs tau_idle > tau_fast > 0");
  }
}

std::size_t choose_level(const InteractionClock& clock, const LevelPolicy& policy,
                         std::size_t current, std::size_t level_count, Clock::time_point now) {
  if (level_count == 0) throw ConfigError("choose_level: empty level ladder");
  const std::size_t finest = level_count - 1;
  current = std::min(current, finest);
  const auto last = clock.last();
  if (!last) return current;
  if (now - *last >= policy.tau_idle) return std::min(current + 1, finest);
  if (auto gap = clock.median_gap(); gap && *gap < policy.tau_fast) return 0;
  return current;
}

}  // namespace steer::hierarchy
