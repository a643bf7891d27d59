#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steer/sched/task_tree.hpp"

namespace steer::sched {

/// H - M - 1 for a task at tree level M of a depth-H tree. Throws
/// ScheduleError when M >= H.
std::uint32_t processing_order(std::uint32_t tree_level, std::uint32_t depth);

/// Dependency-respecting order: tier (processing order) ascending, then
/// branch load descending, est_flops descending, id ascending. Tiers are
/// counted from the deepest level, so a task always follows its children.
std::vector<TaskId> build_priority_list(const TaskTree& tree);

/// Equal fractions, min(ceil(est_flops / unit_cost), max_shares) of them.
std::vector<double> split_task(double est_flops, double unit_cost, std::size_t max_shares);

struct Slot {
  std::uint32_t processor = 0;
  TaskId task = 0;
  double share = 1.0;
  bool operator==(const Slot&) const = default;
};

struct Phase {
  std::size_t index = 0;
  std::vector<Slot> slots;  // ascending processor
  bool operator==(const Phase&) const = default;
};

struct Schedule {
  std::vector<Phase> phases;
  std::size_t processor_count = 1;
  double unit_cost = 1.0;
  bool operator==(const Schedule&) const = default;
};

/// Median est_flops over the leaves.
double default_unit_cost(const TaskTree& tree);

/// Walks `order`, splitting each task and placing every share in the
/// earliest phase after the task's children that still has a free
/// processor; processors are picked round-robin.
Schedule assign_phases(const TaskTree& tree, const std::vector<TaskId>& order,
                       std::size_t processors, double unit_cost);

/// build_priority_list + assign_phases; unit cost defaults to the leaf median.
Schedule schedule(const TaskTree& tree, std::size_t processors,
                  std::optional<double> unit_cost = std::nullopt);

/// One phase per chunk of P tasks, deepest level first, no splitting.
Schedule naive_level_schedule(const TaskTree& tree, std::size_t processors);

struct Violation {
  enum class Kind { Dependency, ShareSum, SlotReuse, UnknownTask };
  Kind kind;
  std::string detail;
};

/// First violation found, or nullopt when the schedule is sound.
std::optional<Violation> validate(const Schedule& s, const TaskTree& tree);

struct Fullness {
  std::vector<double> per_phase;
  double aggregate = 0.0;  // mean of per_phase
};

/// Per phase: sum of share * est_flops over slots / (P * largest slot cost).
Fullness phase_fullness(const Schedule& s, const TaskTree& tree);

/// `phase processor task share` rows with a header line.
std::string format_schedule(const Schedule& s);
/// `phase,busy_processors,fullness` rows.
std::string fullness_csv(const Schedule& s, const TaskTree& tree);
/// `phase,processor,task,share,cost` rows for an occupancy chart.
std::string occupancy_csv(const Schedule& s, const TaskTree& tree);

}  // namespace steer::sched
