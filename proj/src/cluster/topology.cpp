#include "steer/cluster/topology.hpp"

#include <algorithm>
#include <deque>

#include "steer/error.hpp"

namespace steer::cluster {

std::vector<RowBand> partition(std::size_t height, std::size_t workers) {
  if (workers < 1) throw ConfigError("need at least one worker");
  if (workers > height) {
    throw ConfigError(std::to_string(workers) + " workers exceed " + std::to_string(height) +
                      " rows");
  }
  std::vector<RowBand> out;
  const std::size_t base = height / workers, extra = height % workers;
  std::size_t start = 0;
  for (std::size_t i = 0; i < workers; ++i) {
    const std::size_t rows = base + (i < extra ? 1 : 0);
    out.push_back({start, rows});
    start += rows;
  }
  return out;
}

BroadcastTree::BroadcastTree(std::size_t workers, std::size_t fanout)
    : workers_(workers), fanout_(fanout) {
  if (workers < 1) throw ConfigError("broadcast tree needs at least one rank");
  if (fanout < 2) throw ConfigError("broadcast fanout must be at least 2");
}

std::size_t BroadcastTree::parent(std::size_t rank) const {
  if (rank == 0 || rank >= workers_) throw ConfigError("rank " + std::to_string(rank) + " has no parent");
  return rank / fanout_;
}

std::vector<std::size_t> BroadcastTree::children(std::size_t rank) const {
  std::vector<std::size_t> out;
  for (std::size_t c = rank * fanout_; c < rank * fanout_ + fanout_ && c < workers_; ++c) {
    if (c != 0) out.push_back(c);
  }
  return out;
}

std::size_t BroadcastTree::depth_of(std::size_t rank) const {
  std::size_t d = 0;
  for (; rank > 0; rank /= fanout_) ++d;
  return d;
}

std::size_t BroadcastTree::depth() const { return depth_of(workers_ - 1); }

std::size_t DeliveryReport::max_sends() const {
  return sends.empty() ? 0 : *std::max_element(sends.begin(), sends.end());
}

DeliveryReport simulate_broadcast(const BroadcastTree& tree,
                                  const std::function<bool(std::size_t)>& reachable) {
  DeliveryReport r;
  r.sends.assign(tree.workers(), 0);
  // (sender, target, via_grandparent)
  struct Hop {
    std::size_t from, to;
    bool reparented;
  };
  std::deque<Hop> queue;
  for (auto c : tree.children(0)) queue.push_back({0, c, false});
  while (!queue.empty()) {
    const Hop h = queue.front();
    queue.pop_front();
    ++r.sends[h.from];
    if (!reachable(h.to)) {
      r.unreachable.push_back(h.to);
      for (auto g : tree.children(h.to)) queue.push_back({h.from, g, true});
      continue;
    }
    ++r.messages;
    r.delivered.push_back(h.to);
    if (h.reparented) ++r.reparented;
    for (auto c : tree.children(h.to)) queue.push_back({h.to, c, false});
  }
  return r;
}

}  // namespace steer::cluster
