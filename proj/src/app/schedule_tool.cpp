#include "steer/app/schedule_tool.hpp"

#include <fstream>
#include <sstream>

#include "steer/error.hpp"
#include "steer/sched/scheduler.hpp"

namespace steer::app {
namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write `" + path + "`");
  f << text;
}

}  // namespace

void run_schedule_tool(const ScheduleToolOptions& opts, std::ostream& out) {
  std::optional<sched::TaskTree> tree;
  if (opts.octree) {
    tree = sched::TaskTree::complete_octree(*opts.octree);
  } else {
    std::ifstream f(opts.tree_path);
    if (!f) throw ParseError("cannot read tree file `" + opts.tree_path + "`");
    std::ostringstream ss;
    ss << f.rdbuf();
    tree = sched::TaskTree::parse(ss.str());
  }
  const auto s = sched::schedule(*tree, opts.processors, opts.unit_cost);
  if (auto v = sched::validate(s, *tree)) throw ScheduleError("internal: " + v->detail);
  const auto naive = sched::naive_level_schedule(*tree, opts.processors);
  const auto f = sched::phase_fullness(s, *tree);
  const auto fn = sched::phase_fullness(naive, *tree);

  out << sched::format_schedule(s);
  out << "\nphases " << s.phases.size() << "  processors " << s.processor_count << "  unit_cost "
      << s.unit_cost << "  tasks " << tree->size() << "  depth " << tree->depth() << '\n';
  out << "fullness";
  for (double v : f.per_phase) out << ' ' << v;
  out << "\naggregate fullness " << f.aggregate << "  (level-by-level: " << fn.aggregate << " over "
      << naive.phases.size() << " phases)\n";
  if (!opts.fullness_csv.empty()) write_file(opts.fullness_csv, sched::fullness_csv(s, *tree));
  if (!opts.occupancy_csv.empty()) write_file(opts.occupancy_csv, sched::occupancy_csv(s, *tree));
}

}  // namespace steer::app
