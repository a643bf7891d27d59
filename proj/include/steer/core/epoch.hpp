#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <vector>

namespace steer {

/// Per-epoch state handed to the computation. Only the abort flag crosses
/// threads; everything else belongs to the epoch's compute function.
class EpochContext {
 public:
  using HookId = std::size_t;

  explicit EpochContext(std::uint64_t epoch) : epoch_(epoch) {}
  ~EpochContext() { finish(); }
  EpochContext(const EpochContext&) = delete;
  EpochContext& operator=(const EpochContext&) = delete;

  std::uint64_t epoch() const noexcept { return epoch_; }

  /// Wait-free; safe from any thread working on this epoch.
  bool should_abort() const noexcept {
    polls_.store(polls_.load(std::memory_order_relaxed) + 1, std::memory_order_relaxed);
    return abort_.load(std::memory_order_acquire);
  }
  /// True only for the call that flips the flag.
  bool request_abort() noexcept { return !abort_.exchange(true, std::memory_order_acq_rel); }
  bool abort_requested() const noexcept { return abort_.load(std::memory_order_acquire); }
  /// Shared with sibling workers so any of them can stop the rest.
  const std::atomic<bool>& abort_flag() const noexcept { return abort_; }

  /// Hooks run once, newest first, when the epoch ends. Throws
  /// LifecycleError after finish().
  HookId register_cleanup(std::function<void()> hook);
  /// Runs the hooks; later calls do nothing.
  void finish();
  bool finished() const;

  std::uint64_t polls() const noexcept { return polls_.load(std::memory_order_relaxed); }

 private:
  const std::uint64_t epoch_;
  std::atomic<bool> abort_{false};
  mutable std::atomic<std::uint64_t> polls_{0};
  mutable std::mutex hooks_mu_;
  std::vector<std::function<void()>> hooks_;
  bool finished_ = false;
};

}  // namespace steer
