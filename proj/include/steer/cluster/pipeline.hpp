#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "steer/cluster/band.hpp"

namespace steer::cluster {

/// Band rows after each of the most recent sweeps, so a gather or a stop
/// decided for an earlier sweep can still be answered by a rank that has
/// run ahead.
class SnapshotRing {
 public:
  explicit SnapshotRing(std::size_t capacity) : capacity_(capacity < 2 ? 2 : capacity) {}
  void push(std::uint64_t sweep, std::vector<double> rows) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.emplace_back(sweep, std::move(rows));
  }
  const std::vector<double>* find(std::uint64_t sweep) const {
    for (const auto& [s, rows] : entries_) {
      if (s == sweep) return &rows;
    }
    return nullptr;
  }

 private:
  std::size_t capacity_;
  std::deque<std::pair<std::uint64_t, std::vector<double>>> entries_;
};

/// How far a rank can be ahead of the slowest one: finishing sweep s needs
/// the next rank's first row of sweep s-1, so each link allows two sweeps.
/// The slack covers relay latency.
inline std::size_t snapshot_depth(std::size_t workers) { return 2 * workers + 16; }

/// One sweep of a band in the global row order, so that any split into
/// bands reproduces the single-band result exactly.
///   await_above(s)  must install the rank above's last row after sweep s
///   await_below(s)  must install the rank below's first row after s-1
///   first_done(s)   publishes this band's first row after sweep s
/// Each await returns false when the sweep should be abandoned (stop,
/// abort, link loss); so does should_abort between rows.
template <class AwaitAbove, class AwaitBelow, class FirstDone, class AbortCheck>
bool pipelined_sweep(Band& band, const kernels::StencilKernels& k, std::uint64_t s, bool has_above,
                     bool has_below, double& residual, AwaitAbove&& await_above,
                     AwaitBelow&& await_below, FirstDone&& first_done, AbortCheck&& should_abort) {
  residual = 0.0;
  const std::size_t n = band.rows().rows;
  // Sweep 1 reads the initial halo that came with the band.
  const bool need_below = has_below && s > 1;
  if (has_above && !await_above(s)) return false;
  if (n == 1 && need_below && !await_below(s)) return false;
  if (!band.sweep_rows(k, 1, 1, residual, should_abort)) return false;
  if (has_above) first_done(s);
  if (n == 1) return true;
  if (!band.sweep_rows(k, 2, n - 1, residual, should_abort)) return false;
  if (need_below && !await_below(s)) return false;
  return band.sweep_rows(k, n, n, residual, should_abort);
}

}  // namespace steer::cluster
