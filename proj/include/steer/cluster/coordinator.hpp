#pragma once

#include <sys/types.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "steer/cluster/topology.hpp"
#include "steer/cluster/worker.hpp"
#include "steer/core/epoch.hpp"
#include "steer/core/registry.hpp"
#include "steer/heat/grid.hpp"
#include "steer/heat/solver.hpp"
#include "steer/protocol/channel.hpp"

namespace steer::cluster {

struct ClusterOptions {
  enum class Mode { Process, Thread };
  std::size_t workers = 1;  // ranks, coordinator included
  std::size_t fanout = 4;
  Mode mode = Mode::Process;
  std::string worker_exe;  // process mode; defaults to this executable
  std::chrono::microseconds tick{5000};
  std::chrono::milliseconds gather_interval{100};
  std::size_t initial_height = 300;  // band flags for spawned workers
};

struct ParallelResult {
  heat::SolveResult result;
  std::vector<std::uint32_t> sweep_us;  // mean per rank
  std::uint64_t frames = 0;
};

/// Rank 0. Owns the links to ranks 1..W-1 and relays halo rows between
/// neighbours so the bands sweep as one pipelined Gauss-Seidel pass: every
/// row sees the same neighbour values it would in a single-band sweep, so
/// the result does not depend on W. Stops at the first sweep whose global
/// residual meets the tolerance and gathers frames.
class Cluster {
 public:
  /// Spawns or starts the other ranks and wires the broadcast tree.
  /// Throws TransportError/ConfigError when that fails.
  explicit Cluster(ClusterOptions opts);
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  std::size_t workers() const noexcept { return opts_.workers; }
  const BroadcastTree& tree() const noexcept { return tree_; }
  std::vector<pid_t> worker_pids() const;

  /// Starts the fan-out of an applied batch and returns once rank 0's
  /// direct sends are queued.
  void broadcast(std::uint64_t epoch, const std::vector<Assignment>& updates);
  /// Update messages sent so far by every rank. Thread ranks are read
  /// live; process ranks as of their latest SweepReport.
  std::uint64_t broadcast_messages() const;

  using FrameSink = std::function<void(const protocol::ResultFrame&)>;
  /// One epoch over all ranks. On normal completion `grid` holds the
  /// gathered solution; on abort it is left untouched. Throws
  /// ConsistencyError if a gather ever mixes epochs or sweeps, and
  /// ConfigError if `epoch` does not exceed the previous solve's.
  ParallelResult solve(heat::Grid& grid, const heat::SolverConfig& cfg, std::uint64_t epoch,
                       std::uint32_t level, EpochContext& ctx, const FrameSink& on_frame = {});

  std::uint64_t consistency_errors() const;

 private:
  struct Peer {
    std::unique_ptr<protocol::Channel> channel;
    std::deque<protocol::SweepReport> reports;  // completed sweeps, in order
    std::deque<protocol::BandData> bands;
    std::uint32_t forwarded = 0;
    bool aborted = false;
    bool lost = false;
  };
  void start_threads(std::vector<WorkerLinks> links);
  void start_processes();
  void reader(std::size_t rank);
  /// Waits until pred() or abort; false on abort. Throws if a rank is lost.
  template <class Pred>
  bool wait_for(std::unique_lock<std::mutex>& lock, EpochContext& ctx, Pred pred);

  ClusterOptions opts_;
  BroadcastTree tree_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Peer> peers_;  // index = rank; peers_[0] unused
  std::uint64_t solving_epoch_ = 0;
  bool solved_any_ = false;
  std::map<std::uint64_t, std::vector<double>> local_below_;  // rank 1's first rows
  std::uint64_t root_sends_ = 0;
  std::uint64_t consistency_errors_ = 0;
  std::vector<std::thread> readers_;
  std::vector<std::unique_ptr<WorkerNode>> nodes_;
  std::vector<std::thread> node_threads_;
  std::vector<pid_t> pids_;
  std::string socket_dir_;
};

}  // namespace steer::cluster
