#include "steer/sched/task_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "steer/error.hpp"

namespace steer::sched {

TaskTree::TaskTree(std::vector<Entry> entries) {
  if (entries.empty()) throw ParseError("task tree is empty");
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.id < b.id; });
  nodes_.reserve(entries.size());
  std::optional<TaskId> root;
  for (const auto& e : entries) {
    if (!index_.emplace(e.id, nodes_.size()).second) {
      throw ParseError("duplicate task id " + std::to_string(e.id));
    }
    if (!(e.est_flops > 0.0) || !std::isfinite(e.est_flops)) {
      throw ParseError("task " + std::to_string(e.id) + " needs a positive cost estimate");
    }
    if (!e.parent) {
      if (root) throw ParseError("task tree has more than one root");
      root = e.id;
    }
    TaskNode n;
    n.id = e.id;
    n.parent = e.parent;
    n.est_flops = e.est_flops;
    nodes_.push_back(std::move(n));
  }
  if (!root) throw ParseError("task tree has no root");
  root_ = *root;
  for (auto& n : nodes_) {
    if (!n.parent) continue;
    auto it = index_.find(*n.parent);
    if (it == index_.end()) {
      throw ParseError("task " + std::to_string(n.id) + " names unknown parent " +
                       std::to_string(*n.parent));
    }
    auto& p = nodes_[it->second];
    p.children.push_back(n.id);
    if (p.children.size() > kMaxChildren) {
      throw ParseError("task " + std::to_string(p.id) + " has more than 8 children");
    }
  }
  // Breadth-first from the root assigns levels and detects cycles/orphans.
  std::vector<std::size_t> order{index_.at(root_)};
  order.reserve(nodes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& n = nodes_[order[i]];
    for (TaskId c : n.children) {
      auto& child = nodes_[index_.at(c)];
      child.tree_level = n.tree_level + 1;
      order.push_back(index_.at(c));
    }
  }
  if (order.size() != nodes_.size()) throw ParseError("task tree contains a cycle");
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& n = nodes_[*it];
    n.branch_load += n.est_flops;
    if (n.parent) nodes_[index_.at(*n.parent)].branch_load += n.branch_load;
    depth_ = std::max(depth_, n.tree_level + 1);
  }
}

TaskTree TaskTree::parse(std::string_view text) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw, parent;
    if (!(ls >> kw)) continue;
    long long id = -1;
    double cost = 0.0;
    std::string extra;
    if (kw != "node" || !(ls >> id >> parent >> cost) || (ls >> extra) || id < 0 ||
        id > 0xFFFFFFFFLL) {
      throw ParseError("tree line " + std::to_string(lineno) +
                       ": expected `node <id> <parent|-> <est_flops>`");
    }
    Entry e{static_cast<TaskId>(id), std::nullopt, cost};
    if (parent != "-") {
      try {
        std::size_t used = 0;
        const unsigned long p = std::stoul(parent, &used);
        if (used != parent.size() || p > 0xFFFFFFFFUL) throw ParseError("");
        e.parent = static_cast<TaskId>(p);
      } catch (const std::exception&) {
        throw ParseError("tree line " + std::to_string(lineno) + ": bad parent `" + parent + "`");
      }
    }
    entries.push_back(e);
  }
  return TaskTree(std::move(entries));
}

std::string TaskTree::format() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& n : nodes_) {
    out << "node " << n.id << ' ';
    if (n.parent) out << *n.parent; else out << '-';
    out << ' ' << n.est_flops << '\n';
  }
  return out.str();
}

TaskTree TaskTree::complete_octree(std::uint32_t depth, double cost) {
  if (depth == 0) throw ParseError("octree depth must be at least 1");
  std::vector<Entry> entries{{0, std::nullopt, cost}};
  std::size_t level_begin = 0, level_end = 1;
  for (std::uint32_t l = 1; l < depth; ++l) {
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (int c = 0; c < 8; ++c) {
        entries.push_back({static_cast<TaskId>(entries.size()), static_cast<TaskId>(p), cost});
      }
    }
    level_begin = level_end;
    level_end = entries.size();
  }
  return TaskTree(std::move(entries));
}

TaskTree TaskTree::random(std::mt19937_64& rng, std::uint32_t max_depth, double lo, double hi) {
  std::uniform_real_distribution<double> cost(lo, hi);
  std::uniform_int_distribution<int> fan(0, 8);
  std::vector<Entry> entries{{0, std::nullopt, cost(rng)}};
  std::vector<std::pair<TaskId, std::uint32_t>> frontier{{0, 0}};
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const auto [id, level] = frontier[i];
    if (level + 1 >= max_depth) continue;
    const int kids = fan(rng);
    for (int c = 0; c < kids; ++c) {
      const auto child = static_cast<TaskId>(entries.size());
      entries.push_back({child, id, cost(rng)});
      frontier.push_back({child, level + 1});
    }
  }
  return TaskTree(std::move(entries));
}

}  // namespace steer::sched
