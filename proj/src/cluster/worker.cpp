#include "steer/cluster/worker.hpp"

#include <spdlog/spdlog.h>
#include <unistd.h>

#include "steer/cluster/band.hpp"
#include "steer/cluster/pipeline.hpp"
#include "steer/error.hpp"
#include "steer/kernels/stencil.hpp"

namespace steer::cluster {
namespace {

using protocol::Channel;
using SteadyClock = std::chrono::steady_clock;

std::unique_ptr<protocol::FdStream> connect_retry(const protocol::Address& addr,
                                                  std::chrono::milliseconds budget) {
  const auto deadline = SteadyClock::now() + budget;
  for (;;) {
    try {
      return protocol::connect(addr);
    } catch (const TransportError&) {
      if (SteadyClock::now() > deadline) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
}

template <class T>
T expect(Channel& ch, const char* what) {
  auto m = ch.recv();
  if (!m) throw TransportError(std::string("link closed while waiting for ") + what);
  auto* v = std::get_if<T>(&*m);
  if (!v) throw ProtocolError(std::string("expected ") + what);
  return std::move(*v);
}

}  // namespace

WorkerNode::WorkerNode(std::uint32_t rank, WorkerLinks links, std::chrono::microseconds tick,
                       std::size_t history)
    : rank_(rank), links_(std::move(links)), tick_(tick), history_(history) {}

WorkerNode::~WorkerNode() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    if (ctx_) ctx_->request_abort();
  }
  cv_.notify_all();
  links_.coordinator->close();
  if (links_.parent) links_.parent->close();
  for (auto& c : links_.children) c->close();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

void WorkerNode::on_update(const protocol::UpdateBroadcast& u) {
  for (auto& c : links_.children) {
    if (c->send(u)) ++forwarded_;
    else spdlog::warn("rank {}: child link {} is down; its subtree waits for the next epoch start",
                      rank_, c->peer());
  }
  std::lock_guard lock(mu_);
  pending_epoch_ = std::max(pending_epoch_, u.epoch);
}

void WorkerNode::coordinator_reader() {
  for (;;) {
    std::optional<protocol::Message> m;
    try {
      m = links_.coordinator->recv();
    } catch (const Error& e) {
      spdlog::error("rank {}: coordinator link failed: {}", rank_, e.what());
    }
    if (!m || std::holds_alternative<protocol::Bye>(*m)) break;
    if (auto* b = std::get_if<protocol::EpochBegin>(&*m)) {
      std::lock_guard lock(mu_);
      if (!latest_begin_ || b->epoch >= latest_begin_->epoch) latest_begin_ = std::move(*b);
      pending_epoch_ = std::max(pending_epoch_, latest_begin_->epoch);
    } else if (auto* a = std::get_if<protocol::SweepAck>(&*m)) {
      std::lock_guard lock(mu_);
      if (a->epoch > relay_epoch_) {
        relay_epoch_ = a->epoch;
        above_.clear();
        below_.clear();
        controls_.clear();
      }
      if (a->epoch == relay_epoch_) {
        if (!a->ghost_above.empty()) above_[a->sweep] = std::move(a->ghost_above);
        if (!a->ghost_below.empty()) below_[a->sweep] = std::move(a->ghost_below);
        if (a->stop || a->want_band) controls_.push_back(std::move(*a));
      }
    } else if (auto* u = std::get_if<protocol::UpdateBroadcast>(&*m)) {
      on_update(*u);
    }
    cv_.notify_all();
  }
  std::lock_guard lock(mu_);
  closed_ = true;
  if (ctx_) ctx_->request_abort();
  cv_.notify_all();
}

void WorkerNode::parent_reader() {
  for (;;) {
    std::optional<protocol::Message> m;
    try {
      m = links_.parent->recv();
    } catch (const Error& e) {
      spdlog::warn("rank {}: parent link failed: {}", rank_, e.what());
    }
    if (!m) return;
    if (auto* u = std::get_if<protocol::UpdateBroadcast>(&*m)) on_update(*u);
  }
}

void WorkerNode::ticker() {
  std::unique_lock lock(mu_);
  while (!closed_) {
    cv_.wait_for(lock, tick_);
    if (ctx_ && pending_epoch_ > ctx_->epoch() && ctx_->request_abort()) cv_.notify_all();
  }
}

void WorkerNode::run_epoch(protocol::EpochBegin begin, EpochContext& ctx) {
  const auto& k = kernels::active_kernels();
  const std::uint64_t epoch = begin.epoch;
  const RowBand rows{begin.band_start, begin.band_rows};
  Band band(begin.width, begin.height, rows, std::move(begin.values), std::move(begin.mask));
  const bool has_below = rows.start + rows.rows < band.height();
  SnapshotRing ring(history_);
  Outcome outcome = Outcome::Running;
  std::chrono::nanoseconds waited{0};

  auto answer = [&](const protocol::SweepAck& c) {
    const auto* snap = ring.find(c.sweep);
    protocol::BandData bd{rank_, epoch, c.sweep, begin.band_start, begin.band_rows, {}};
    if (snap) {
      bd.values = *snap;
      if (c.stop) band.restore(*snap);
    } else {
      // The coordinator rejects a gather tagged with the wrong sweep.
      spdlog::error("rank {}: no snapshot of sweep {} left", rank_, c.sweep);
      bd.sweep = 0;
    }
    links_.coordinator->send(bd);
    if (c.stop) outcome = Outcome::Stopped;
  };
  // Blocks until ready() (which may take what it waits for), answering
  // gathers meanwhile. False when the epoch ends first.
  auto wait_until = [&](auto&& ready) {
    const auto t0 = SteadyClock::now();
    for (;;) {
      std::deque<protocol::SweepAck> ctrl;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] {
          return closed_ || ctx.abort_requested() || !controls_.empty() || ready();
        });
        if (closed_ || ctx.abort_requested()) {
          outcome = Outcome::Interrupted;
          return false;
        }
        if (controls_.empty()) break;
        ctrl.swap(controls_);
      }
      for (const auto& c : ctrl) {
        answer(c);
        if (outcome == Outcome::Stopped) return false;
      }
    }
    waited += SteadyClock::now() - t0;
    return true;
  };
  auto take = [&](std::map<std::uint64_t, std::vector<double>>& from, std::uint64_t s,
                  std::vector<double>& into) {
    return wait_until([&] {
      auto it = from.find(s);
      if (it == from.end()) return false;
      into = std::move(it->second);
      from.erase(from.begin(), std::next(it));
      return true;
    });
  };
  std::vector<double> halo;
  auto await_above = [&](std::uint64_t s) {
    if (!take(above_, s, halo)) return false;
    band.set_ghost_above(halo);
    return true;
  };
  auto await_below = [&](std::uint64_t s) {
    if (!take(below_, s, halo)) return false;
    band.set_ghost_below(halo);
    return true;
  };
  auto first_done = [&](std::uint64_t s) {
    protocol::SweepReport rep;
    rep.rank = rank_;
    rep.epoch = epoch;
    rep.sweep = s;
    rep.forwarded = forwarded_.load();
    rep.first_row.assign(band.first_row().begin(), band.first_row().end());
    links_.coordinator->send(rep);
  };
  auto should_abort = [&] { return ctx.should_abort(); };

  for (std::uint64_t s = 1; s <= begin.max_iter && outcome == Outcome::Running; ++s) {
    protocol::SweepReport rep;
    waited = std::chrono::nanoseconds{0};
    const auto t0 = SteadyClock::now();
    if (!pipelined_sweep(band, k, s, true, has_below, rep.residual, await_above, await_below,
                         first_done, should_abort)) {
      if (outcome == Outcome::Running) outcome = Outcome::Interrupted;
      break;
    }
    rep.sweep_us = static_cast<std::uint32_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(SteadyClock::now() - t0 - waited)
            .count());
    ring.push(s, band.interior());
    rep.rank = rank_;
    rep.epoch = epoch;
    rep.sweep = s;
    rep.complete = true;
    rep.forwarded = forwarded_.load();
    rep.last_row.assign(band.last_row().begin(), band.last_row().end());
    links_.coordinator->send(rep);
    wait_until([] { return true; });
  }
  // Out of sweeps: hold the band until the coordinator names the stop.
  if (outcome == Outcome::Running) wait_until([] { return false; });
  if (outcome == Outcome::Interrupted && ctx.abort_requested()) {
    protocol::SweepReport rep;
    rep.rank = rank_;
    rep.epoch = epoch;
    rep.aborted = true;
    rep.forwarded = forwarded_.load();
    links_.coordinator->send(rep);
  }
}

void WorkerNode::run() {
  threads_.emplace_back([this] { coordinator_reader(); });
  if (links_.parent) threads_.emplace_back([this] { parent_reader(); });
  threads_.emplace_back([this] { ticker(); });
  std::uint64_t last_epoch = 0;
  bool first = true;
  for (;;) {
    protocol::EpochBegin begin;
    std::shared_ptr<EpochContext> ctx;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] {
        return closed_ || (latest_begin_ && (first || latest_begin_->epoch > last_epoch));
      });
      if (closed_) break;
      begin = *latest_begin_;
      if (relay_epoch_ < begin.epoch) {
        relay_epoch_ = begin.epoch;
        above_.clear();
        below_.clear();
        controls_.clear();
      }
      ctx = std::make_shared<EpochContext>(begin.epoch);
      ctx_ = ctx;
    }
    first = false;
    last_epoch = begin.epoch;
    run_epoch(std::move(begin), *ctx);
    ctx->finish();
    std::lock_guard lock(mu_);
    ctx_.reset();
  }
}

int run_worker_process(const WorkerArgs& args) {
  try {
    auto coord = std::make_unique<Channel>(connect_retry(args.coordinator, std::chrono::seconds(10)));
    coord->send(protocol::WorkerJoin{args.rank, static_cast<std::uint32_t>(::getpid())});
    const auto assign = expect<protocol::TopologyAssign>(*coord, "TopologyAssign");
    const BroadcastTree tree(assign.worker_count, assign.fanout);

    std::unique_ptr<protocol::Listener> listener;
    if (!assign.listen_addr.empty()) {
      listener = protocol::Listener::open(protocol::Address::parse(assign.listen_addr));
    }
    WorkerLinks links;
    if (!assign.parent_addr.empty()) {
      links.parent = std::make_unique<Channel>(
          connect_retry(protocol::Address::parse(assign.parent_addr), std::chrono::seconds(10)));
      links.parent->send(protocol::WorkerJoin{args.rank, static_cast<std::uint32_t>(::getpid())});
    }
    const std::size_t want = tree.children(args.rank).size();
    while (links.children.size() < want) {
      auto s = listener ? listener->accept() : nullptr;
      if (!s) throw TransportError("child links incomplete");
      auto ch = std::make_unique<Channel>(std::move(s));
      expect<protocol::WorkerJoin>(*ch, "child WorkerJoin");
      links.children.push_back(std::move(ch));
    }
    coord->send(protocol::WorkerJoin{args.rank, static_cast<std::uint32_t>(::getpid())});
    links.coordinator = std::move(coord);
    WorkerNode node(args.rank, std::move(links), std::chrono::microseconds(assign.tick_us),
                    snapshot_depth(assign.worker_count));
    node.run();
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("worker rank {}: {}", args.rank, e.what());
    return 3;
  }
}

}  // namespace steer::cluster
