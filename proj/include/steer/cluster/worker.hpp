#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "steer/cluster/topology.hpp"
#include "steer/core/epoch.hpp"
#include "steer/protocol/channel.hpp"
#include "steer/protocol/transport.hpp"

namespace steer::cluster {

struct WorkerLinks {
  std::unique_ptr<protocol::Channel> coordinator;
  /// Null when the tree parent is the coordinator itself; updates then
  /// arrive on the coordinator link.
  std::unique_ptr<protocol::Channel> parent;
  std::vector<std::unique_ptr<protocol::Channel>> children;
};

/// A non-zero rank. Sweeps whatever band the coordinator hands it in step
/// with its neighbours' halo rows, relays update broadcasts down the tree
/// and checks for them on its own tick.
class WorkerNode {
 public:
  /// `history`: sweeps of band snapshots kept for late gathers.
  WorkerNode(std::uint32_t rank, WorkerLinks links, std::chrono::microseconds tick,
             std::size_t history);
  ~WorkerNode();
  WorkerNode(const WorkerNode&) = delete;
  WorkerNode& operator=(const WorkerNode&) = delete;

  /// Returns after Bye or when the coordinator link drops.
  void run();
  std::uint32_t forwarded() const noexcept { return forwarded_.load(); }
  std::uint32_t rank() const noexcept { return rank_; }

 private:
  void coordinator_reader();
  void parent_reader();
  void on_update(const protocol::UpdateBroadcast& u);
  void ticker();
  enum class Outcome { Running, Stopped, Interrupted };
  /// Runs one epoch's band to its stop. Called without the lock.
  void run_epoch(protocol::EpochBegin begin, EpochContext& ctx);

  const std::uint32_t rank_;
  WorkerLinks links_;
  const std::chrono::microseconds tick_;
  const std::size_t history_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<protocol::EpochBegin> latest_begin_;
  // Relays for relay_epoch_, keyed by the sweep they serve.
  std::uint64_t relay_epoch_ = 0;
  std::map<std::uint64_t, std::vector<double>> above_, below_;
  std::deque<protocol::SweepAck> controls_;
  std::uint64_t pending_epoch_ = 0;
  std::shared_ptr<EpochContext> ctx_;
  bool closed_ = false;
  std::atomic<std::uint32_t> forwarded_{0};

  std::vector<std::thread> threads_;
};

struct WorkerArgs {
  std::uint32_t rank = 1;
  RowBand band;
  protocol::Address coordinator;
};

/// Entry point of a spawned worker process. Returns the exit code.
int run_worker_process(const WorkerArgs& args);

}  // namespace steer::cluster
