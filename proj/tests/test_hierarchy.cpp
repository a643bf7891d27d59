#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "steer/error.hpp"
#include "steer/hierarchy/levels.hpp"
#include "steer/hierarchy/transfer.hpp"

using namespace steer;
using namespace steer::hierarchy;
using namespace std::chrono_literals;

TEST_CASE("LevelSpec defaults, parsing and the doubling rule") {
  const LevelSpec d;
  REQUIRE(d.count() == 3);
  CHECK(d.at(0) == Dims{75, 75});
  CHECK(d.at(2) == Dims{300, 300});
  CHECK(d.to_string() == "75x75,150x150,300x300");
  CHECK(LevelSpec::parse("10x20,20x40").at(1) == Dims{20, 40});
  CHECK_THROWS_AS(LevelSpec::parse("75x75,150x151"), ConfigError);
  CHECK_THROWS_AS(LevelSpec::parse("75x75,300x300"), ConfigError);
  CHECK_THROWS_AS(LevelSpec::parse("abc"), ConfigError);
  CHECK_THROWS_AS(LevelSpec(std::vector<Dims>{}), ConfigError);
}

TEST_CASE("InteractionClock keeps the last eight stamps") {
  InteractionClock c;
  const auto t0 = Clock::now();
  CHECK_FALSE(c.median_gap());
  c.record(t0);
  CHECK_FALSE(c.median_gap());
  // Early wide gaps fall out of the ring once eight tight ones follow.
  c.record(t0 + 10s);
  c.record(t0 + 20s);
  auto t = t0 + 20s;
  for (int i = 0; i < 8; ++i) c.record(t += 100ms);
  CHECK(c.size() == 8);
  CHECK(*c.median_gap() == Clock::duration(100ms));
  CHECK(*c.last() == t);
  CHECK_THROWS_AS(c.record(t - 1ms), ConfigError);
  InteractionClock even;
  even.record(t0);
  even.record(t0 + 100ms);
  even.record(t0 + 400ms);
  CHECK(*even.median_gap() == Clock::duration(200ms));
}

TEST_CASE("choose_level examples") {
  const LevelPolicy p;
  const auto t0 = Clock::now();
  InteractionClock quiet;
  CHECK(choose_level(quiet, p, 2, 3, t0) == 2);

  InteractionClock burst;
  for (int i = 0; i < 8; ++i) burst.record(t0 + i * 100ms);
  CHECK(choose_level(burst, p, 2, 3, t0 + 750ms) == 0);

  InteractionClock once;
  once.record(t0);
  CHECK(choose_level(once, p, 0, 3, t0 + 2500ms) == 1);
  CHECK(choose_level(once, p, 2, 3, t0 + 2500ms) == 2);

  // Slow updates: neither fast nor idle.
  InteractionClock slow;
  for (int i = 0; i < 4; ++i) slow.record(t0 + i * 1s);
  CHECK(choose_level(slow, p, 1, 3, t0 + 3500ms) == 1);
  CHECK_THROWS_AS(choose_level(quiet, p, 0, 0, t0), ConfigError);
  CHECK_THROWS_AS((LevelPolicy{2s, 1s}.validate()), ConfigError);
}

TEST_CASE("choose_level: valid indices, one-step promotion, and no oscillation") {
  std::mt19937_64 rng(5);
  const LevelPolicy p;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t count = 1 + rng() % 4;
    InteractionClock clock;
    auto t = Clock::time_point{} + 1h;
    std::size_t level = count - 1;
    for (int step = 0; step < 500; ++step) {
      t += std::chrono::milliseconds(rng() % 300);
      if (rng() % 7 == 0) clock.record(t);
      const std::size_t next = choose_level(clock, p, level, count, t);
      REQUIRE(next < count);
      REQUIRE((next <= level + 1));
      REQUIRE((next >= level || next == 0));
      level = next;
    }
  }
  // A single click: the level sequence never goes down, then recovers stepwise.
  InteractionClock clock;
  const auto t0 = Clock::time_point{} + 1h;
  clock.record(t0);
  std::size_t level = 0, downs = 0;
  for (auto t = t0; t < t0 + 10s; t += 10ms) {
    const std::size_t next = choose_level(clock, p, level, 3, t);
    if (next < level) ++downs;
    level = next;
  }
  CHECK(downs == 0);
  CHECK(level == 2);
}

TEST_CASE("restrict picks even cells and rebuilds the mask from the scenario") {
  heat::Scenario empty;
  heat::Grid fine(4, 4, 0.0);
  // A 2x2 level is all border, so only the shape is interesting here.
  CHECK(restrict_to_coarse(fine, empty).width() == 2);

  heat::Grid g(8, 6, 0.0);
  for (std::size_t r = 1; r < 5; ++r)
    for (std::size_t c = 1; c < 7; ++c) g.set(r, c, 10.0 * r + c);
  const heat::Grid co = restrict_to_coarse(g, empty);
  REQUIRE(co.width() == 4);
  REQUIRE(co.height() == 3);
  CHECK(co.at(1, 1) == g.at(2, 2));
  CHECK(co.at(1, 2) == g.at(2, 4));
  CHECK(co.fixed(0, 0));
  CHECK_FALSE(co.fixed(1, 1));

  heat::Scenario s;
  s.sources.push_back({1, 0.5, 0.5, 42.0});
  heat::Grid constant(40, 40, 7.0);
  for (std::size_t r = 1; r < 39; ++r)
    for (std::size_t c = 1; c < 39; ++c) constant.set(r, c, 7.0);
  const heat::Grid cc = restrict_to_coarse(constant, heat::Scenario{{}, {}, 7.0});
  for (double v : cc.values()) CHECK(v == 7.0);
  const heat::Grid cs = restrict_to_coarse(constant, s);
  CHECK(cs.fixed(10, 10));
  CHECK(cs.at(10, 10) == 42.0);
  CHECK_THROWS_AS(restrict_to_coarse(heat::Grid(5, 4), empty), DimensionError);
}

TEST_CASE("prolong reproduces constants and linear ramps") {
  heat::Scenario empty;
  heat::Grid c(10, 8, 0.0);
  for (std::size_t r = 1; r < 7; ++r)
    for (std::size_t col = 1; col < 9; ++col) c.set(r, col, 3.25);
  heat::Grid f = prolong(c, {20, 16}, empty);
  // Interior fine cells whose stencil touches only interior coarse cells.
  for (std::size_t r = 2; r < 13; ++r)
    for (std::size_t col = 2; col < 17; ++col) CHECK(f.at(r, col) == doctest::Approx(3.25));

  // A ramp that also covers the border, so every coarse value is linear.
  auto lin = [](double r, double c) { return 1.5 * r - 0.25 * c + 2.0; };
  heat::Grid open(10, 8, 0.0);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t col = 0; col < 10; ++col) {
      if (open.fixed(r, col)) open.fix(r, col, lin(r, col));
      else open.set(r, col, lin(r, col));
    }
  const heat::Grid fr = prolong(open, {20, 16}, empty);
  for (std::size_t r = 1; r < 15; ++r)
    for (std::size_t col = 1; col < 19; ++col)
      CHECK(fr.at(r, col) == doctest::Approx(lin(r / 2.0, col / 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(prolong(c, {21, 16}, empty), DimensionError);
}

TEST_CASE("prolong preserves constrained values exactly") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const heat::Scenario s = steer::testing::random_warm_scene(rng);
    heat::Grid coarse = heat::rasterize(s, 30, 30);
    heat::solve(coarse, heat::SolverConfig{50, 1e-12}, [] { return false; });
    const heat::Grid fine = prolong(coarse, {60, 60}, s);
    const heat::Grid truth = heat::rasterize(s, 60, 60);
    for (std::size_t i = 0; i < fine.size(); ++i) {
      REQUIRE(fine.mask()[i] == truth.mask()[i]);
      if (truth.mask()[i]) REQUIRE(fine.values()[i] == truth.values()[i]);
    }
  }
}

TEST_CASE("restrict after prolong gives the coarse field back") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-50, 50);
  heat::Scenario empty;
  for (int rep = 0; rep < 20; ++rep) {
    heat::Grid c(16, 12, 0.0);
    for (std::size_t r = 1; r < 11; ++r)
      for (std::size_t col = 1; col < 15; ++col) c.set(r, col, u(rng));
    const heat::Grid back = restrict_to_coarse(prolong(c, {32, 24}, empty), empty);
    CHECK(back == c);
  }
}

TEST_CASE("level_error") {
  const heat::Scenario s = heat::reference_scenario();
  heat::Grid g = heat::rasterize(s, 40, 40);
  heat::solve(g, heat::SolverConfig{100000, 1e-10}, [] { return false; });
  CHECK(level_error(g, g, s) == 0.0);
  heat::Grid zero(8, 8, 0.0);
  CHECK_THROWS_AS(level_error(zero, zero, heat::Scenario{}), DimensionError);
}

TEST_CASE("coarser levels differ more from the finest on random scenarios") {
  std::mt19937_64 rng(31);
  const LevelSpec ladder = LevelSpec::parse("24x24,48x48,96x96");
  for (int rep = 0; rep < 5; ++rep) {
    const heat::Scenario s = steer::testing::random_warm_scene(rng);
    const auto levels = solve_cascade(s, ladder, heat::SolverConfig{500000, 1e-9});
    for (const auto& l : levels) REQUIRE(l.result.converged);
    const double mid = level_error(levels[1].solution, levels[2].solution, s);
    const double coarse = level_error(levels[0].solution, levels[2].solution, s);
    CHECK(mid > 0.0);
    CHECK(coarse >= mid);
  }
}

TEST_CASE("a prolonged guess needs fewer sweeps than a cold start") {
  std::mt19937_64 rng(41);
  const heat::SolverConfig cfg{500000, 1e-5};
  for (int rep = 0; rep < 8; ++rep) {
    const heat::Scenario s = steer::testing::random_warm_scene(rng);
    heat::Grid coarse = heat::rasterize(s, 40, 40);
    heat::solve(coarse, cfg, [] { return false; });
    heat::Grid seeded = prolong(coarse, {80, 80}, s);
    heat::Grid cold = heat::rasterize(s, 80, 80);
    const auto a = heat::solve(seeded, cfg, [] { return false; });
    const auto b = heat::solve(cold, cfg, [] { return false; });
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(a.iterations < b.iterations);
  }
}
