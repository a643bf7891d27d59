#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace steer::cluster {

struct RowBand {
  std::size_t start = 0;
  std::size_t rows = 0;
  friend bool operator==(const RowBand&, const RowBand&) = default;
};

/// Contiguous bands covering [0, height); the first height % workers bands
/// get one extra row. Throws ConfigError unless 1 <= workers <= height.
std::vector<RowBand> partition(std::size_t height, std::size_t workers);

/// Fan-out tree over ranks 0..W-1 with the coordinator at rank 0. The
/// parent of rank i is i / k, so a rank's depth is its number of base-k
/// digits and the tree depth is ceil(log_k W).
class BroadcastTree {
 public:
  /// Throws ConfigError for workers < 1 or fanout < 2.
  BroadcastTree(std::size_t workers, std::size_t fanout = 4);

  std::size_t workers() const noexcept { return workers_; }
  std::size_t fanout() const noexcept { return fanout_; }
  /// Rank 0 has no parent; asking for it throws ConfigError.
  std::size_t parent(std::size_t rank) const;
  std::vector<std::size_t> children(std::size_t rank) const;
  std::size_t depth_of(std::size_t rank) const;
  std::size_t depth() const;

 private:
  std::size_t workers_;
  std::size_t fanout_;
};

struct DeliveryReport {
  std::vector<std::size_t> delivered;    // ranks that got the batch, in send order
  std::vector<std::size_t> unreachable;  // ranks whose link failed
  std::vector<std::size_t> sends;        // per rank, attempted sends
  std::size_t messages = 0;              // successful sends
  std::size_t reparented = 0;            // ranks reached through a grandparent
  std::size_t max_sends() const;
};

/// Walks the fan-out of one batch from rank 0. A rank that cannot be
/// reached is reported and its children are served by the rank that tried
/// to reach it.
DeliveryReport simulate_broadcast(const BroadcastTree& tree,
                                  const std::function<bool(std::size_t)>& reachable);

}  // namespace steer::cluster
