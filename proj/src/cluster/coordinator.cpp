#include "steer/cluster/coordinator.hpp"

#include <signal.h>
#include <spdlog/spdlog.h>
#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>

#include "steer/cluster/band.hpp"
#include "steer/cluster/pipeline.hpp"
#include "steer/error.hpp"
#include "steer/kernels/stencil.hpp"

namespace steer::cluster {
namespace {

using SteadyClock = std::chrono::steady_clock;
using protocol::Channel;

std::string rank_socket(const std::string& dir, std::size_t rank) {
  return "unix:" + dir + "/rank" + std::to_string(rank) + ".sock";
}

}  // namespace

Cluster::Cluster(ClusterOptions opts) : opts_(std::move(opts)), tree_(opts_.workers, opts_.fanout) {
  if (opts_.tick.count() <= 0) throw ConfigError("worker tick must be positive");
  peers_.resize(opts_.workers);
  if (opts_.workers == 1) return;
  if (opts_.mode == ClusterOptions::Mode::Thread) {
    std::vector<WorkerLinks> links(opts_.workers);
    for (std::size_t r = 1; r < opts_.workers; ++r) {
      auto [here, there] = protocol::memory_pair();
      peers_[r].channel = std::make_unique<Channel>(std::move(here));
      links[r].coordinator = std::make_unique<Channel>(std::move(there));
      const std::size_t p = tree_.parent(r);
      if (p != 0) {
        auto [up, down] = protocol::memory_pair();
        links[r].parent = std::make_unique<Channel>(std::move(up));
        links[p].children.push_back(std::make_unique<Channel>(std::move(down)));
      }
    }
    start_threads(std::move(links));
  } else {
    start_processes();
  }
  for (std::size_t r = 1; r < opts_.workers; ++r) readers_.emplace_back([this, r] { reader(r); });
}

void Cluster::start_threads(std::vector<WorkerLinks> links) {
  for (std::size_t r = 1; r < opts_.workers; ++r) {
    nodes_.push_back(std::make_unique<WorkerNode>(static_cast<std::uint32_t>(r),
                                                  std::move(links[r]), opts_.tick,
                                                  snapshot_depth(opts_.workers)));
  }
  for (auto& n : nodes_) node_threads_.emplace_back([node = n.get()] { node->run(); });
}

void Cluster::start_processes() {
  char tmpl[] = "/tmp/steer-XXXXXX";
  if (!::mkdtemp(tmpl)) throw TransportError("cannot create socket directory");
  socket_dir_ = tmpl;
  const auto coord_addr = protocol::Address::parse("unix:" + socket_dir_ + "/coord.sock");
  auto listener = protocol::Listener::open(coord_addr);
  std::string exe = opts_.worker_exe;
  if (exe.empty()) exe = std::filesystem::read_symlink("/proc/self/exe").string();
  const auto bands = partition(std::max(opts_.initial_height, opts_.workers), opts_.workers);
  const pid_t self = ::getpid();
  for (std::size_t r = 1; r < opts_.workers; ++r) {
    std::vector<std::string> args{exe,
                                  "--worker",
                                  "--rank",
                                  std::to_string(r),
                                  "--band",
                                  std::to_string(bands[r].start),
                                  std::to_string(bands[r].rows),
                                  "--coordinator",
                                  coord_addr.to_string()};
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      ::prctl(PR_SET_PDEATHSIG, SIGKILL);
      if (::getppid() != self) ::_exit(3);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(exe.c_str(), argv.data());
      ::_exit(3);
    }
    pids_.push_back(pid);
  }
  // Bound the wait for joins: a worker that dies before connecting would
  // otherwise block accept() forever.
  std::mutex wmu;
  std::condition_variable wcv;
  bool joined = false;
  // A worker that exits early (bad executable, crash) fails the start at once.
  std::thread watchdog([&] {
    const auto deadline = SteadyClock::now() + std::chrono::seconds(15);
    std::unique_lock lock(wmu);
    while (!wcv.wait_for(lock, std::chrono::milliseconds(20), [&] { return joined; })) {
      bool died = false;
      for (pid_t pid : pids_) {
        siginfo_t info{};
        if (::waitid(P_PID, static_cast<id_t>(pid), &info, WEXITED | WNOHANG | WNOWAIT) == 0 &&
            info.si_pid != 0) {
          died = true;
        }
      }
      if (died || SteadyClock::now() > deadline) {
        listener->close();
        return;
      }
    }
  });
  auto finish_watchdog = [&] {
    {
      std::lock_guard lock(wmu);
      joined = true;
    }
    wcv.notify_all();
    watchdog.join();
  };
  try {
    for (std::size_t i = 1; i < opts_.workers; ++i) {
      auto s = listener->accept();
      if (!s) throw TransportError("workers did not connect in time");
      auto ch = std::make_unique<Channel>(std::move(s));
      auto m = ch->recv();
      const auto* join = m ? std::get_if<protocol::WorkerJoin>(&*m) : nullptr;
      if (!join || join->rank == 0 || join->rank >= opts_.workers || peers_[join->rank].channel) {
        throw ProtocolError("bad worker join");
      }
      peers_[join->rank].channel = std::move(ch);
    }
    for (std::size_t r = 1; r < opts_.workers; ++r) {
      protocol::TopologyAssign a;
      a.rank = static_cast<std::uint32_t>(r);
      a.worker_count = static_cast<std::uint32_t>(opts_.workers);
      a.fanout = static_cast<std::uint32_t>(opts_.fanout);
      a.tick_us = static_cast<std::uint32_t>(opts_.tick.count());
      const std::size_t p = tree_.parent(r);
      if (p != 0) a.parent_addr = rank_socket(socket_dir_, p);
      if (!tree_.children(r).empty()) a.listen_addr = rank_socket(socket_dir_, r);
      peers_[r].channel->send(a);
    }
    for (std::size_t r = 1; r < opts_.workers; ++r) {
      auto m = peers_[r].channel->recv();
      if (!m || !std::holds_alternative<protocol::WorkerJoin>(*m)) {
        throw TransportError("rank " + std::to_string(r) + " failed to wire its tree links");
      }
    }
  } catch (...) {
    finish_watchdog();
    for (pid_t pid : pids_) ::kill(pid, SIGKILL);
    for (pid_t pid : pids_) ::waitpid(pid, nullptr, 0);
    pids_.clear();
    std::error_code ec;
    std::filesystem::remove_all(socket_dir_, ec);
    throw;
  }
  finish_watchdog();
}

Cluster::~Cluster() {
  for (std::size_t r = 1; r < peers_.size(); ++r) {
    if (!peers_[r].channel) continue;
    peers_[r].channel->send(protocol::Bye{});
    peers_[r].channel->flush();
  }
  for (auto& t : node_threads_) t.join();
  for (std::size_t r = 1; r < peers_.size(); ++r) {
    if (peers_[r].channel) peers_[r].channel->close();
  }
  for (auto& t : readers_) t.join();
  nodes_.clear();
  for (pid_t pid : pids_) {
    int status = 0;
    const auto deadline = SteadyClock::now() + std::chrono::seconds(3);
    while (::waitpid(pid, &status, WNOHANG) == 0) {
      if (SteadyClock::now() > deadline) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  if (!socket_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(socket_dir_, ec);
  }
}

std::vector<pid_t> Cluster::worker_pids() const { return pids_; }

void Cluster::reader(std::size_t rank) {
  auto& peer = peers_[rank];
  for (;;) {
    std::optional<protocol::Message> m;
    try {
      m = peer.channel->recv();
    } catch (const Error& e) {
      spdlog::error("rank {} link failed: {}", rank, e.what());
    }
    std::unique_lock lock(mu_);
    if (!m) {
      peer.lost = true;
      cv_.notify_all();
      return;
    }
    std::size_t to = 0;
    protocol::SweepAck relay;
    if (auto* rep = std::get_if<protocol::SweepReport>(&*m)) {
      peer.forwarded = std::max(peer.forwarded, rep->forwarded);
      if (rep->epoch == solving_epoch_) {
        relay.epoch = rep->epoch;
        if (rep->aborted) {
          peer.aborted = true;
        } else if (!rep->complete) {
          // First row after sweep s: the rank above needs it for sweep s+1.
          if (rank == 1) {
            local_below_[rep->sweep + 1] = std::move(rep->first_row);
          } else {
            to = rank - 1;
            relay.sweep = rep->sweep + 1;
            relay.ghost_below = std::move(rep->first_row);
          }
        } else {
          if (rank + 1 < peers_.size()) {
            to = rank + 1;
            relay.sweep = rep->sweep;
            relay.ghost_above = std::move(rep->last_row);
          }
          rep->last_row.clear();
          peer.reports.push_back(std::move(*rep));
        }
      }
    } else if (auto* band = std::get_if<protocol::BandData>(&*m)) {
      if (band->epoch == solving_epoch_) {
        peer.bands.push_back(std::move(*band));
      } else {
        spdlog::debug("dropping rank {} band of finished epoch {}", rank, band->epoch);
      }
    }
    lock.unlock();
    cv_.notify_all();
    if (to != 0) peers_[to].channel->send(relay);
  }
}

void Cluster::broadcast(std::uint64_t epoch, const std::vector<Assignment>& updates) {
  const protocol::UpdateBroadcast msg{epoch, updates};
  for (std::size_t c : tree_.children(0)) {
    if (peers_[c].channel && peers_[c].channel->send(msg)) {
      std::lock_guard lock(mu_);
      ++root_sends_;
    }
  }
  cv_.notify_all();
}

std::uint64_t Cluster::broadcast_messages() const {
  std::lock_guard lock(mu_);
  std::uint64_t total = root_sends_;
  if (!nodes_.empty()) {
    // In-process ranks can be asked directly.
    for (const auto& n : nodes_) total += n->forwarded();
    return total;
  }
  for (std::size_t r = 1; r < peers_.size(); ++r) total += peers_[r].forwarded;
  return total;
}

std::uint64_t Cluster::consistency_errors() const {
  std::lock_guard lock(mu_);
  return consistency_errors_;
}

template <class Pred>
bool Cluster::wait_for(std::unique_lock<std::mutex>& lock, EpochContext& ctx, Pred pred) {
  for (;;) {
    if (pred()) return true;
    if (ctx.should_abort()) return false;
    for (std::size_t r = 1; r < peers_.size(); ++r) {
      if (peers_[r].lost) throw TransportError("rank " + std::to_string(r) + " is gone");
    }
    cv_.wait_for(lock, std::chrono::milliseconds(1));
  }
}

ParallelResult Cluster::solve(heat::Grid& grid, const heat::SolverConfig& cfg, std::uint64_t epoch,
                              std::uint32_t level, EpochContext& ctx, const FrameSink& on_frame) {
  cfg.validate();
  const std::size_t W = opts_.workers;
  const auto bands = partition(grid.height(), W);
  const std::size_t w = grid.width();
  const auto& k = kernels::active_kernels();
  {
    std::lock_guard lock(mu_);
    if (solved_any_ && epoch <= solving_epoch_) {
      throw ConfigError("cluster epochs must increase: " + std::to_string(epoch) + " after " +
                        std::to_string(solving_epoch_));
    }
    solved_any_ = true;
    solving_epoch_ = epoch;
    local_below_.clear();
    for (std::size_t r = 1; r < W; ++r) {
      peers_[r].reports.clear();
      peers_[r].bands.clear();
      peers_[r].aborted = false;
    }
  }
  for (std::size_t r = 1; r < W; ++r) {
    Band b = Band::from_grid(grid, bands[r]);
    protocol::EpochBegin msg;
    msg.epoch = epoch;
    msg.level_index = level;
    msg.width = static_cast<std::uint32_t>(w);
    msg.height = static_cast<std::uint32_t>(grid.height());
    msg.band_start = static_cast<std::uint32_t>(bands[r].start);
    msg.band_rows = static_cast<std::uint32_t>(bands[r].rows);
    msg.max_iter = cfg.max_iter;
    msg.tolerance = cfg.tolerance;
    msg.values = b.values();
    msg.mask = b.mask();
    peers_[r].channel->send(msg);
  }
  Band local = Band::from_grid(grid, bands[0]);
  SnapshotRing ring(snapshot_depth(W));
  std::map<std::uint64_t, double> local_residual;
  ParallelResult out;
  std::vector<std::uint64_t> sweep_total(W, 0);
  std::uint64_t settled = 0, gathered = 0;
  auto last_gather = SteadyClock::now();

  enum class State { Running, Finished, Aborted };
  auto check_lost = [&] {
    for (std::size_t r = 1; r < W; ++r) {
      if (peers_[r].lost) throw TransportError("rank " + std::to_string(r) + " is gone");
    }
  };
  // Every rank's band as it was after sweep t, as one frame.
  auto gather = [&](std::uint64_t t, double residual, bool stop) -> State {
    const auto* mine = ring.find(t);
    if (!mine) throw ConsistencyError("rank 0 no longer holds sweep " + std::to_string(t));
    protocol::ResultFrame frame;
    frame.epoch = epoch;
    frame.level_index = level;
    frame.iteration = t;
    frame.residual = residual;
    frame.width = static_cast<std::uint32_t>(w);
    frame.height = static_cast<std::uint32_t>(grid.height());
    frame.field = *mine;
    if (stop) local.restore(*mine);
    for (std::size_t r = 1; r < W; ++r) {
      protocol::SweepAck ask;
      ask.epoch = epoch;
      ask.sweep = t;
      ask.global_residual = residual;
      ask.stop = stop;
      ask.want_band = true;
      peers_[r].channel->send(ask);
    }
    std::vector<protocol::BandData> parts(W);
    {
      std::unique_lock lock(mu_);
      const bool ok = wait_for(lock, ctx, [&] {
        for (std::size_t r = 1; r < W; ++r) {
          if (peers_[r].bands.empty()) return false;
        }
        return true;
      });
      if (!ok) return State::Aborted;
      for (std::size_t r = 1; r < W; ++r) {
        parts[r] = std::move(peers_[r].bands.front());
        peers_[r].bands.pop_front();
        if (parts[r].epoch != epoch || parts[r].sweep != t) {
          ++consistency_errors_;
          throw ConsistencyError("gather mixed epoch " + std::to_string(parts[r].epoch) +
                                 " sweep " + std::to_string(parts[r].sweep) + " into epoch " +
                                 std::to_string(epoch) + " sweep " + std::to_string(t));
        }
      }
    }
    for (std::size_t r = 1; r < W; ++r) {
      frame.field.insert(frame.field.end(), parts[r].values.begin(), parts[r].values.end());
    }
    if (frame.field.size() != w * grid.height()) {
      throw ConsistencyError("gathered field has the wrong size");
    }
    ++out.frames;
    last_gather = SteadyClock::now();
    gathered = t;
    if (stop) std::copy(frame.field.begin(), frame.field.end(), grid.values().begin());
    if (on_frame) on_frame(frame);
    return stop ? State::Finished : State::Running;
  };
  // Folds in every sweep all ranks have finished, stopping at the first
  // that converged (or the last allowed one).
  auto settle = [&]() -> State {
    std::optional<std::uint64_t> stop_at;
    {
      std::lock_guard lock(mu_);
      check_lost();
      for (std::size_t r = 1; r < W; ++r) {
        // A rank that aborted saw a newer epoch; this one is about to end too.
        if (peers_[r].aborted) return State::Aborted;
      }
      for (;;) {
        const std::uint64_t t = settled + 1;
        auto mine = local_residual.find(t);
        if (mine == local_residual.end()) break;
        bool all = true;
        for (std::size_t r = 1; r < W && all; ++r) {
          all = !peers_[r].reports.empty();
        }
        if (!all) break;
        double residual = mine->second;
        local_residual.erase(mine);
        for (std::size_t r = 1; r < W; ++r) {
          const auto& rep = peers_[r].reports.front();
          if (rep.sweep != t) {
            ++consistency_errors_;
            throw ConsistencyError("rank " + std::to_string(r) + " reported sweep " +
                                   std::to_string(rep.sweep) + " where " + std::to_string(t) +
                                   " was due");
          }
          residual = std::max(residual, rep.residual);
          sweep_total[r] += rep.sweep_us;
          peers_[r].reports.pop_front();
        }
        settled = t;
        out.result.iterations = t;
        out.result.final_residual = residual;
        if (residual <= cfg.tolerance || t == cfg.max_iter) {
          out.result.converged = residual <= cfg.tolerance;
          stop_at = t;
          break;
        }
      }
    }
    if (stop_at) return gather(*stop_at, out.result.final_residual, true);
    if (settled > gathered && SteadyClock::now() - last_gather >= opts_.gather_interval) {
      return gather(settled, out.result.final_residual, false);
    }
    return State::Running;
  };

  State state = State::Running;
  std::vector<double> halo;
  auto await_below = [&](std::uint64_t s) {
    for (;;) {
      {
        std::unique_lock lock(mu_);
        if (auto it = local_below_.find(s); it != local_below_.end()) {
          halo = std::move(it->second);
          local_below_.erase(local_below_.begin(), std::next(it));
          lock.unlock();
          local.set_ghost_below(halo);
          return true;
        }
      }
      state = settle();
      if (state != State::Running) return false;
      if (ctx.should_abort()) return false;
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, std::chrono::milliseconds(1),
                   [&] { return local_below_.count(s) > 0; });
    }
  };
  auto no_above = [](std::uint64_t) { return true; };
  auto no_first = [](std::uint64_t) {};
  auto should_abort = [&] { return ctx.should_abort(); };

  for (std::uint64_t s = 1; s <= cfg.max_iter && state == State::Running; ++s) {
    double residual = 0.0;
    const auto t0 = SteadyClock::now();
    if (!pipelined_sweep(local, k, s, false, W > 1, residual, no_above, await_below, no_first,
                         should_abort)) {
      break;
    }
    sweep_total[0] += static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(SteadyClock::now() - t0).count());
    ring.push(s, local.interior());
    {
      std::lock_guard lock(mu_);
      local_residual[s] = residual;
    }
    if (W > 1) {
      protocol::SweepAck relay;
      relay.epoch = epoch;
      relay.sweep = s;
      relay.ghost_above.assign(local.last_row().begin(), local.last_row().end());
      peers_[1].channel->send(relay);
    }
    state = settle();
  }
  // Out of local sweeps: the other ranks still have to catch up.
  while (state == State::Running && !ctx.should_abort()) {
    state = settle();
    if (state != State::Running) break;
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, std::chrono::milliseconds(1));
  }
  if (state != State::Finished) {
    // A rank's abort means a newer epoch exists; wait for ours to notice.
    while (!ctx.should_abort()) std::this_thread::sleep_for(std::chrono::microseconds(200));
    out.result.aborted = true;
    out.result.converged = false;
    return out;
  }
  for (std::size_t r = 0; r < W; ++r) {
    out.sweep_us.push_back(static_cast<std::uint32_t>(
        sweep_total[r] / std::max<std::uint64_t>(1, out.result.iterations)));
  }
  return out;
}

}  // namespace steer::cluster
