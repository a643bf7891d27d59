#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace steer::app {

struct ScheduleToolOptions {
  std::string tree_path;                // `node <id> <parent|-> <est_flops>` lines
  std::optional<std::uint32_t> octree;  // instead of a file: complete octree, unit costs
  std::size_t processors = 8;
  std::optional<double> unit_cost;
  std::string fullness_csv;   // optional output files
  std::string occupancy_csv;
};

/// Prints the schedule table and a fullness summary (with the naive
/// level-by-level baseline for comparison). Throws ParseError/ScheduleError
/// for bad input.
void run_schedule_tool(const ScheduleToolOptions& opts, std::ostream& out);

}  // namespace steer::app
