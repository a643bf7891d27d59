#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "steer/error.hpp"
#include "steer/sched/scheduler.hpp"

using namespace steer;
using namespace steer::sched;
using namespace steer::testing;

TEST_CASE("processing_order") {
  CHECK(processing_order(3, 4) == 0);
  CHECK(processing_order(0, 1) == 0);
  CHECK(processing_order(0, 3) == 2);
  CHECK_THROWS_AS(processing_order(3, 3), ScheduleError);
}

TEST_CASE("tree parsing and invariants") {
  const auto t = TaskTree::parse("# demo\nnode 0 - 10\nnode 1 0 5\nnode 2 0 3 # leaf\nnode 3 1 1\n");
  CHECK(t.depth() == 3);
  CHECK(t.node(0).branch_load == 19.0);
  CHECK(t.node(1).branch_load == 6.0);
  CHECK(t.node(3).tree_level == 2);
  CHECK(TaskTree::parse(t.format()).format() == t.format());
  CHECK_THROWS_AS(TaskTree::parse("node 0 - 1\nnode 1 - 1\n"), ParseError);
  CHECK_THROWS_AS(TaskTree::parse("node 0 - 1\nnode 1 0 0\n"), ParseError);
  CHECK_THROWS_AS(TaskTree::parse("node 0 - 1\nnode 0 0 1\n"), ParseError);
  CHECK_THROWS_AS(TaskTree::parse("node 0 - 1\nnode 1 7 1\n"), ParseError);
  CHECK_THROWS_AS(TaskTree::parse("node 0 1 1\nnode 1 0 1\n"), ParseError);
  CHECK_THROWS_AS(TaskTree::parse(""), ParseError);
  std::string wide = "node 0 - 1\n";
  for (int i = 1; i <= 9; ++i) wide += "node " + std::to_string(i) + " 0 1\n";
  CHECK_THROWS_AS(TaskTree::parse(wide), ParseError);
  try {
    TaskTree::parse("node 0 - 1\nnode x 0 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  const auto oct = TaskTree::complete_octree(3);
  CHECK(oct.size() == 73);
  CHECK(oct.depth() == 3);
}

TEST_CASE("priority list examples") {
  CHECK(build_priority_list(TaskTree::parse("node 4 - 1\n")) == std::vector<TaskId>{4});
  const auto t = TaskTree::parse("node 0 - 1\nnode 1 0 3\nnode 2 0 5\n");
  CHECK(build_priority_list(t) == std::vector<TaskId>{2, 1, 0});
  std::vector<TaskId> want{1, 2, 3, 4, 5, 6, 7, 8, 0};
  CHECK(build_priority_list(TaskTree::complete_octree(2)) == want);
  // Branch load outranks own size within a tier.
  const auto b = TaskTree::parse("node 0 - 1\nnode 1 0 2\nnode 2 0 9\nnode 3 1 50\n");
  CHECK(build_priority_list(b) == std::vector<TaskId>{3, 1, 2, 0});
}

TEST_CASE("split_task examples") {
  CHECK(split_task(2.0, 2.0, 8).size() == 1);
  const auto four = split_task(3.5, 1.0, 8);
  REQUIRE(four.size() == 4);
  for (double s : four) CHECK(s == 0.25);
  CHECK(split_task(100.0, 1.0, 4).size() == 4);
  CHECK(split_task(0.1, 1.0, 4).size() == 1);
  CHECK_THROWS_AS(split_task(1.0, 0.0, 4), ScheduleError);
}

TEST_CASE("assign_phases examples") {
  const auto one = TaskTree::parse("node 0 - 1\n");
  CHECK(schedule(one, 1).phases.size() == 1);
  const auto oct = schedule(TaskTree::complete_octree(2), 8);
  REQUIRE(oct.phases.size() == 2);
  CHECK(oct.phases[0].slots.size() == 8);
  REQUIRE(oct.phases[1].slots.size() == 1);
  CHECK(oct.phases[1].slots[0].task == 0);
  const auto chain = TaskTree::parse("node 0 - 1\nnode 1 0 1\nnode 2 1 1\n");
  CHECK(schedule(chain, 8).phases.size() == 3);
  CHECK_THROWS_AS(schedule(one, 0), ScheduleError);
}

TEST_CASE("validate catches hand-built violations") {
  const auto t = TaskTree::parse("node 0 - 1\nnode 1 0 1\n");
  Schedule same;
  same.processor_count = 2;
  same.phases = {{0, {{0, 1, 1.0}, {1, 0, 1.0}}}};
  auto v = validate(same, t);
  REQUIRE(v);
  CHECK(v->kind == Violation::Kind::Dependency);

  Schedule short_share;
  short_share.processor_count = 1;
  short_share.phases = {{0, {{0, 1, 0.9}}}, {1, {{0, 0, 1.0}}}};
  v = validate(short_share, t);
  REQUIRE(v);
  CHECK(v->kind == Violation::Kind::ShareSum);

  Schedule reuse;
  reuse.processor_count = 2;
  reuse.phases = {{0, {{0, 1, 0.5}, {0, 1, 0.5}}}, {1, {{0, 0, 1.0}}}};
  v = validate(reuse, t);
  REQUIRE(v);
  CHECK(v->kind == Violation::Kind::SlotReuse);

  Schedule stranger;
  stranger.processor_count = 1;
  stranger.phases = {{0, {{0, 9, 1.0}}}};
  v = validate(stranger, t);
  REQUIRE(v);
  CHECK(v->kind == Violation::Kind::UnknownTask);
}

TEST_CASE("phase fullness examples") {
  const auto leaves = TaskTree::complete_octree(2);
  const auto s = schedule(leaves, 8);
  const auto f = phase_fullness(s, leaves);
  CHECK(f.per_phase[0] == 1.0);
  CHECK(f.per_phase[1] == 0.125);
  CHECK(f.aggregate == doctest::Approx(0.5625));
}

TEST_CASE("heuristic phase count matches the brute-force minimum on complete octrees") {
  for (std::size_t P : {1u, 4u, 8u, 64u}) {
    CAPTURE(P);
    CHECK(schedule(TaskTree::complete_octree(1), P).phases.size() == 1);
    const auto d2 = TaskTree::complete_octree(2);
    CHECK(schedule(d2, P).phases.size() == min_phases_bruteforce(d2, P));
    CHECK(schedule(TaskTree::complete_octree(3), P).phases.size() == min_phases_depth3(P));
  }
  // The level-collapsed oracle agrees with the exhaustive one where both fit.
  CHECK(min_phases_bruteforce(TaskTree::complete_octree(2), 3) == 4);
  CHECK(min_phases_depth3(64) == 3);
  CHECK(min_phases_depth3(1) == 73);
}

TEST_CASE("random trees: valid, deterministic, no worse than the naive schedule") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto t = TaskTree::random(rng, 4, 1.0, 100.0);
    const std::size_t P = 1 + rng() % 16;
    const auto s = schedule(t, P);
    auto v = validate(s, t);
    if (v) FAIL_CHECK(v->detail);
    if (rep < 100) {
      CHECK(schedule(t, P) == s);
      const auto naive = naive_level_schedule(t, P);
      REQUIRE_FALSE(validate(naive, t));
      CHECK(phase_fullness(s, t).aggregate >= phase_fullness(naive, t).aggregate);
    }
  }
}

TEST_CASE("more processors never mean more phases") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const auto t = TaskTree::random(rng, 4, 1.0, 100.0);
    const double unit = default_unit_cost(t);
    std::size_t prev = SIZE_MAX;
    for (std::size_t P = 1; P <= 32; ++P) {
      const std::size_t n = schedule(t, P, unit).phases.size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("busy processors shrink eightfold per phase") {
  for (std::uint32_t H = 2; H <= 4; ++H) {
    std::size_t P = 1;
    for (std::uint32_t i = 1; i < H; ++i) P *= 8;
    const auto s = schedule(TaskTree::complete_octree(H), P);
    REQUIRE(s.phases.size() == H);
    for (std::size_t p = 1; p < H; ++p) CHECK(s.phases[p].slots.size() * 8 == s.phases[p - 1].slots.size());
  }
}

TEST_CASE("text outputs") {
  const auto t = TaskTree::complete_octree(2);
  const auto s = schedule(t, 8);
  const auto table = format_schedule(s);
  CHECK(table.rfind("phase processor task share\n", 0) == 0);
  CHECK(table.find("1 0 0 1\n") != std::string::npos);
  CHECK(fullness_csv(s, t) == "phase,busy_processors,fullness\n0,8,1\n1,1,0.125\n");
  CHECK(occupancy_csv(s, t).find("0,7,8,1,1\n") != std::string::npos);
}
