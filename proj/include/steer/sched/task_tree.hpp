#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace steer::sched {

using TaskId = std::uint32_t;

struct TaskNode {
  TaskId id = 0;
  std::optional<TaskId> parent;
  std::uint32_t tree_level = 0;  // root = 0
  std::vector<TaskId> children;  // ascending id, at most 8
  double est_flops = 0.0;
  double branch_load = 0.0;  // est_flops summed over the subtree
};

/// Hierarchically dependent tasks: children complete before their parent.
class TaskTree {
 public:
  struct Entry {
    TaskId id;
    std::optional<TaskId> parent;
    double est_flops;
  };
  static constexpr std::size_t kMaxChildren = 8;

  /// Throws ParseError unless the entries form one rooted tree with unique
  /// ids, positive finite costs and at most 8 children per node.
  explicit TaskTree(std::vector<Entry> entries);

  /// `node <id> <parent|-> <est_flops>` per line, `#` comments.
  static TaskTree parse(std::string_view text);
  std::string format() const;

  /// Complete octree of `depth` levels, ids in breadth-first order.
  static TaskTree complete_octree(std::uint32_t depth, double cost = 1.0);
  /// Random tree with at most `max_depth` levels and costs in [lo, hi].
  static TaskTree random(std::mt19937_64& rng, std::uint32_t max_depth, double lo, double hi);

  const TaskNode& node(TaskId id) const { return nodes_.at(index_.at(id)); }
  bool contains(TaskId id) const { return index_.count(id) != 0; }
  TaskId root() const noexcept { return root_; }
  /// Number of levels, H.
  std::uint32_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Nodes in ascending id order.
  const std::vector<TaskNode>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<TaskNode> nodes_;
  std::unordered_map<TaskId, std::size_t> index_;
  TaskId root_ = 0;
  std::uint32_t depth_ = 0;
};

}  // namespace steer::sched
