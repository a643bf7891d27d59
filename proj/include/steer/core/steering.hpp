#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "steer/core/epoch.hpp"
#include "steer/core/events.hpp"
#include "steer/core/registry.hpp"

namespace steer {

using SteadyClock = std::chrono::steady_clock;

struct TickConfig {
  std::chrono::microseconds interval{5000};
  bool enabled = true;
  /// Throws ConfigError for a non-positive interval.
  void validate() const;
  friend bool operator==(const TickConfig&, const TickConfig&) = default;
};

struct UpdateBatch {
  std::vector<Assignment> updates;
  SteadyClock::time_point received_at = SteadyClock::now();
  std::uint64_t source = 0;  // client session id
};

/// The computation for one epoch; returns the number of inner iterations it
/// ran. It must poll ctx.should_abort() inside its innermost loop.
using ComputeFn = std::function<std::uint64_t(const Snapshot&, EpochContext&)>;

struct SteeringStats {
  std::uint64_t epochs_started = 0;
  std::uint64_t epochs_aborted = 0;
  std::uint64_t epochs_completed = 0;
  std::uint64_t batches_received = 0;
  std::uint64_t batches_applied = 0;    // registry writes
  std::uint64_t updates_coalesced = 0;  // batches folded into another one
  std::uint64_t watchdog_warnings = 0;
  std::vector<std::int64_t> restart_latency_us;  // update receipt -> new epoch start
  std::int64_t ticker_cpu_us = 0;                // CPU time spent by the tick thread
};

/// Drives a computation through epochs. A ticker thread drains submitted
/// batches once per tick, merges them (last writer wins per variable),
/// applies the result as one registry write and aborts the running epoch.
class Steering {
 public:
  explicit Steering(Registry& registry, TickConfig tick = {}, EventSink* sink = nullptr);
  ~Steering();
  Steering(const Steering&) = delete;
  Steering& operator=(const Steering&) = delete;

  /// Returns the previous configuration.
  TickConfig set_tick(TickConfig tick);
  TickConfig tick() const;

  /// Queues a batch for the next tick. Throws BatchError right away if the
  /// batch cannot apply; empty batches are dropped.
  void submit(UpdateBatch batch);
  /// Applies a batch now and aborts the running epoch. Returns the epoch the
  /// values belong to (unchanged for an empty batch).
  std::uint64_t apply_update(const UpdateBatch& batch);

  /// Runs epochs until stop(). After a normal completion it waits for the
  /// next update. Seals the registry.
  void run_steered(const ComputeFn& compute);
  /// Aborts the running epoch and makes run_steered return.
  void stop();
  bool stopping() const;

  /// Epoch of the running computation, if any.
  std::optional<std::uint64_t> running_epoch() const;
  /// Latest epoch whose computation finished without abort.
  std::optional<std::uint64_t> completed_epoch() const;

  /// Called after every registry write with the new epoch and the merged
  /// assignments, before the running epoch is told to abort. Set it before
  /// run_steered.
  using ApplyHook = std::function<void(std::uint64_t, const std::vector<Assignment>&)>;
  void set_apply_hook(ApplyHook hook);

  SteeringStats stats() const;
  /// Instants of the most recent pending-update checks (up to 8192).
  std::vector<SteadyClock::time_point> check_times() const;

 private:
  void ticker_loop();
  void check_pending();
  std::uint64_t apply_locked(const std::vector<Assignment>& merged,
                             SteadyClock::time_point earliest);
  void emit(Event e);

  Registry& registry_;
  EventSink* sink_;

  mutable std::mutex tick_mu_;
  std::condition_variable tick_cv_;
  TickConfig tick_;
  bool stop_ = false;

  std::mutex pending_mu_;
  std::deque<UpdateBatch> pending_;

  mutable std::mutex run_mu_;
  std::condition_variable idle_cv_;
  std::shared_ptr<EpochContext> current_;
  std::optional<SteadyClock::time_point> restart_due_;
  std::optional<SteadyClock::time_point> abort_at_;
  std::optional<std::uint64_t> completed_;
  std::uint64_t watched_polls_ = 0;
  SteadyClock::time_point watched_since_{};
  bool warned_ = false;
  SteeringStats stats_;
  std::vector<SteadyClock::time_point> checks_;
  std::size_t checks_head_ = 0;

  ApplyHook apply_hook_;
  std::thread ticker_;
};

}  // namespace steer
