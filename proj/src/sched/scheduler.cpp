#include "steer/sched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "steer/error.hpp"

namespace steer::sched {

std::uint32_t processing_order(std::uint32_t tree_level, std::uint32_t depth) {
  if (tree_level >= depth) {
    throw ScheduleError("tree level " + std::to_string(tree_level) + " outside a depth-" +
                        std::to_string(depth) + " tree");
  }
  return depth - tree_level - 1;
}

std::vector<TaskId> build_priority_list(const TaskTree& tree) {
  std::vector<const TaskNode*> nodes;
  nodes.reserve(tree.size());
  for (const auto& n : tree.nodes()) nodes.push_back(&n);
  const std::uint32_t h = tree.depth();
  std::sort(nodes.begin(), nodes.end(), [h](const TaskNode* a, const TaskNode* b) {
    const auto ta = processing_order(a->tree_level, h), tb = processing_order(b->tree_level, h);
    if (ta != tb) return ta < tb;
    if (a->branch_load != b->branch_load) return a->branch_load > b->branch_load;
    if (a->est_flops != b->est_flops) return a->est_flops > b->est_flops;
    return a->id < b->id;
  });
  std::vector<TaskId> out;
  out.reserve(nodes.size());
  for (auto* n : nodes) out.push_back(n->id);
  return out;
}

std::vector<double> split_task(double est_flops, double unit_cost, std::size_t max_shares) {
  if (!(unit_cost > 0.0)) throw ScheduleError("unit cost must be positive");
  if (max_shares < 1) throw ScheduleError("max_shares must be at least 1");
  const double want = std::ceil(est_flops / unit_cost);
  const std::size_t s =
      std::clamp<std::size_t>(want < 1.0 ? 1 : static_cast<std::size_t>(std::min(want, 1e9)), 1,
                              max_shares);
  return std::vector<double>(s, 1.0 / static_cast<double>(s));
}

double default_unit_cost(const TaskTree& tree) {
  std::vector<double> leaves;
  for (const auto& n : tree.nodes()) {
    if (n.children.empty()) leaves.push_back(n.est_flops);
  }
  std::sort(leaves.begin(), leaves.end());
  const std::size_t m = leaves.size() / 2;
  return leaves.size() % 2 ? leaves[m] : 0.5 * (leaves[m - 1] + leaves[m]);
}

Schedule assign_phases(const TaskTree& tree, const std::vector<TaskId>& order,
                       std::size_t processors, double unit_cost) {
  if (processors < 1) throw ScheduleError("processor count must be at least 1");
  if (!(unit_cost > 0.0)) throw ScheduleError("unit cost must be positive");
  Schedule out;
  out.processor_count = processors;
  out.unit_cost = unit_cost;
  std::vector<std::vector<bool>> busy;       // per phase, per processor
  std::vector<std::size_t> used;             // occupied slots per phase
  std::map<TaskId, std::size_t> last_phase;  // of each placed task
  std::size_t cursor = 0;
  // Phases before `first_open` are full; speeds up long schedules.
  std::size_t first_open = 0;

  for (TaskId id : order) {
    const TaskNode& n = tree.node(id);
    std::size_t ready = 0;
    for (TaskId c : n.children) {
      auto it = last_phase.find(c);
      if (it == last_phase.end()) {
        throw ScheduleError("task " + std::to_string(id) + " listed before its child " +
                            std::to_string(c));
      }
      ready = std::max(ready, it->second + 1);
    }
    std::size_t p = std::max(ready, first_open);
    for (double share : split_task(n.est_flops, unit_cost, processors)) {
      while (p < busy.size() && used[p] == processors) ++p;
      if (p == busy.size()) {
        busy.emplace_back(processors, false);
        used.push_back(0);
        out.phases.push_back({p, {}});
      }
      std::size_t proc = cursor % processors;
      while (busy[p][proc]) proc = (proc + 1) % processors;
      busy[p][proc] = true;
      ++used[p];
      cursor = proc + 1;
      out.phases[p].slots.push_back({static_cast<std::uint32_t>(proc), id, share});
      last_phase[id] = std::max(last_phase[id], p);
    }
    while (first_open < used.size() && used[first_open] == processors) ++first_open;
  }
  for (auto& ph : out.phases) {
    std::sort(ph.slots.begin(), ph.slots.end(),
              [](const Slot& a, const Slot& b) { return a.processor < b.processor; });
  }
  return out;
}

Schedule schedule(const TaskTree& tree, std::size_t processors, std::optional<double> unit_cost) {
  return assign_phases(tree, build_priority_list(tree), processors,
                       unit_cost ? *unit_cost : default_unit_cost(tree));
}

Schedule naive_level_schedule(const TaskTree& tree, std::size_t processors) {
  if (processors < 1) throw ScheduleError("processor count must be at least 1");
  Schedule out;
  out.processor_count = processors;
  out.unit_cost = default_unit_cost(tree);
  std::vector<std::vector<TaskId>> by_level(tree.depth());
  for (const auto& n : tree.nodes()) by_level[n.tree_level].push_back(n.id);
  for (auto level = by_level.rbegin(); level != by_level.rend(); ++level) {
    for (std::size_t i = 0; i < level->size(); i += processors) {
      Phase ph{out.phases.size(), {}};
      for (std::size_t j = i; j < std::min(level->size(), i + processors); ++j) {
        ph.slots.push_back({static_cast<std::uint32_t>(j - i), (*level)[j], 1.0});
      }
      out.phases.push_back(std::move(ph));
    }
  }
  return out;
}

std::optional<Violation> validate(const Schedule& s, const TaskTree& tree) {
  using K = Violation::Kind;
  std::map<TaskId, std::pair<std::size_t, std::size_t>> span;  // first, last phase
  std::map<TaskId, double> total;
  for (std::size_t p = 0; p < s.phases.size(); ++p) {
    std::vector<bool> seen(s.processor_count, false);
    for (const auto& slot : s.phases[p].slots) {
      if (!tree.contains(slot.task)) {
        return Violation{K::UnknownTask, "phase " + std::to_string(p) + " names unknown task " +
                                             std::to_string(slot.task)};
      }
      if (slot.processor >= s.processor_count || seen[slot.processor]) {
        return Violation{K::SlotReuse, "processor " + std::to_string(slot.processor) +
                                           " used twice or out of range in phase " +
                                           std::to_string(p)};
      }
      seen[slot.processor] = true;
      auto [it, fresh] = span.try_emplace(slot.task, p, p);
      if (!fresh) it->second.second = p;
      total[slot.task] += slot.share;
    }
  }
  for (const auto& n : tree.nodes()) {
    auto t = total.find(n.id);
    const double sum = t == total.end() ? 0.0 : t->second;
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "shares of task " << n.id << " sum to " << sum;
      return Violation{K::ShareSum, msg.str()};
    }
  }
  for (const auto& n : tree.nodes()) {
    for (TaskId c : n.children) {
      if (span.at(c).second >= span.at(n.id).first) {
        return Violation{K::Dependency, "task " + std::to_string(n.id) + " starts in phase " +
                                            std::to_string(span.at(n.id).first) + " but child " +
                                            std::to_string(c) + " ends in phase " +
                                            std::to_string(span.at(c).second)};
      }
    }
  }
  return std::nullopt;
}

Fullness phase_fullness(const Schedule& s, const TaskTree& tree) {
  Fullness f;
  for (const auto& ph : s.phases) {
    double sum = 0.0, peak = 0.0;
    for (const auto& slot : ph.slots) {
      const double cost = slot.share * tree.node(slot.task).est_flops;
      sum += cost;
      peak = std::max(peak, cost);
    }
    f.per_phase.push_back(peak > 0.0 ? sum / (static_cast<double>(s.processor_count) * peak)
                                     : 0.0);
  }
  double total = 0.0;
  for (double v : f.per_phase) total += v;
  f.aggregate = f.per_phase.empty() ? 0.0 : total / static_cast<double>(f.per_phase.size());
  return f;
}

std::string format_schedule(const Schedule& s) {
  std::ostringstream out;
  out << "phase processor task share\n";
  for (const auto& ph : s.phases) {
    for (const auto& slot : ph.slots) {
      out << ph.index << ' ' << slot.processor << ' ' << slot.task << ' ' << slot.share << '\n';
    }
  }
  return out.str();
}

std::string fullness_csv(const Schedule& s, const TaskTree& tree) {
  const auto f = phase_fullness(s, tree);
  std::ostringstream out;
  out << "phase,busy_processors,fullness\n";
  for (std::size_t p = 0; p < s.phases.size(); ++p) {
    out << p << ',' << s.phases[p].slots.size() << ',' << f.per_phase[p] << '\n';
  }
  return out.str();
}

std::string occupancy_csv(const Schedule& s, const TaskTree& tree) {
  std::ostringstream out;
  out << "phase,processor,task,share,cost\n";
  for (const auto& ph : s.phases) {
    for (const auto& slot : ph.slots) {
      out << ph.index << ',' << slot.processor << ',' << slot.task << ',' << slot.share << ','
          << slot.share * tree.node(slot.task).est_flops << '\n';
    }
  }
  return out.str();
}

}  // namespace steer::sched
