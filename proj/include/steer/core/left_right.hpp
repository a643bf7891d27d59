#pragma once

#include <array>
#include <atomic>
#include <mutex>
#include <thread>
#include <utility>

namespace steer {

/// Two copies of T; readers never block, a single writer at a time updates
/// the copy nobody reads, flips, waits out stragglers, then updates the other.
template <class T>
class LeftRight {
 public:
  LeftRight() = default;
  explicit LeftRight(const T& init) : copies_{init, init} {}

  template <class F>
  decltype(auto) read(F&& f) const {
    const int vi = version_.load(std::memory_order_seq_cst);
    readers_[vi].fetch_add(1, std::memory_order_seq_cst);
    struct Depart {
      std::atomic<long>& c;
      ~Depart() { c.fetch_sub(1, std::memory_order_release); }
    } depart{readers_[vi]};
    return f(copies_[side_.load(std::memory_order_seq_cst)]);
  }

  /// `f` must be deterministic: it is applied to both copies.
  template <class F>
  void modify(F&& f) {
    std::lock_guard lock(writer_);
    const int side = side_.load(std::memory_order_relaxed);
    f(copies_[1 - side]);
    side_.store(1 - side, std::memory_order_seq_cst);
    toggle_and_wait();
    f(copies_[side]);
  }

 private:
  void toggle_and_wait() {
    const int prev = version_.load(std::memory_order_relaxed);
    const int next = 1 - prev;
    wait_empty(next);
    version_.store(next, std::memory_order_seq_cst);
    wait_empty(prev);
  }
  void wait_empty(int vi) const {
    while (readers_[vi].load(std::memory_order_acquire) != 0) std::this_thread::yield();
  }

  std::array<T, 2> copies_{};
  std::atomic<int> side_{0};
  std::atomic<int> version_{0};
  mutable std::array<std::atomic<long>, 2> readers_{};
  std::mutex writer_;
};

}  // namespace steer
