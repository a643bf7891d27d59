#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <set>
#include <signal.h>
#include <thread>

#include "doctest.h"
#include "steer/cluster/band.hpp"
#include "steer/cluster/coordinator.hpp"
#include "steer/error.hpp"
#include "steer/heat/scenario.hpp"

using namespace steer;
using namespace steer::cluster;
using namespace std::chrono_literals;

namespace {

ClusterOptions thread_opts(std::size_t w) {
  ClusterOptions o;
  o.workers = w;
  o.mode = ClusterOptions::Mode::Thread;
  return o;
}

ClusterOptions process_opts(std::size_t w) {
  ClusterOptions o;
  o.workers = w;
  o.mode = ClusterOptions::Mode::Process;
  o.worker_exe = STEER_EXE;
  return o;
}

double max_diff(const heat::Grid& a, const heat::Grid& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

bool alive(pid_t pid) { return ::kill(pid, 0) == 0; }

}  // namespace

TEST_CASE("partition examples") {
  auto b = partition(300, 4);
  REQUIRE(b.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(b[i] == RowBand{75 * i, 75});
  b = partition(10, 3);
  CHECK(b == std::vector<RowBand>{{0, 4}, {4, 3}, {7, 3}});
  CHECK(partition(17, 1) == std::vector<RowBand>{{0, 17}});
  CHECK_THROWS_AS(partition(3, 4), ConfigError);
  CHECK_THROWS_AS(partition(3, 0), ConfigError);
  for (std::size_t h = 1; h < 60; ++h)
    for (std::size_t w = 1; w <= h; ++w) {
      const auto p = partition(h, w);
      std::size_t next = 0, lo = h, hi = 0;
      for (const auto& r : p) {
        REQUIRE(r.start == next);
        next += r.rows;
        lo = std::min(lo, r.rows);
        hi = std::max(hi, r.rows);
      }
      REQUIRE(next == h);
      REQUIRE(hi - lo <= 1);
    }
}

TEST_CASE("broadcast tree shape") {
  CHECK(BroadcastTree(1).depth() == 0);
  const BroadcastTree t16(16, 4);
  CHECK(t16.depth() == 2);
  CHECK(t16.children(0) == std::vector<std::size_t>{1, 2, 3});
  CHECK(t16.children(1) == std::vector<std::size_t>{4, 5, 6, 7});
  CHECK(t16.parent(7) == 1);
  CHECK(BroadcastTree(5, 4).depth() == 2);
  CHECK(BroadcastTree(4, 4).depth() == 1);
  CHECK_THROWS_AS(t16.parent(0), ConfigError);
  CHECK_THROWS_AS(BroadcastTree(0, 4), ConfigError);
  CHECK_THROWS_AS(BroadcastTree(4, 1), ConfigError);
  for (std::size_t w = 1; w <= 64; ++w) {
    const BroadcastTree t(w, 4);
    std::size_t expect = 0;
    while (static_cast<double>(w) > std::pow(4.0, static_cast<double>(expect))) ++expect;
    CHECK(t.depth() == expect);
  }
}

TEST_CASE("simulated broadcast: W-1 messages, at most k sends each") {
  for (std::size_t k : {2u, 4u, 8u}) {
    for (std::size_t w = 1; w <= 64; ++w) {
      const BroadcastTree t(w, k);
      const auto r = simulate_broadcast(t, [](std::size_t) { return true; });
      REQUIRE(r.messages == w - 1);
      REQUIRE(r.max_sends() <= k);
      std::set<std::size_t> got(r.delivered.begin(), r.delivered.end());
      REQUIRE(got.size() == r.delivered.size());
      REQUIRE(got.size() == w - 1);
      REQUIRE_FALSE(got.count(0));
    }
  }
  const auto r16 = simulate_broadcast(BroadcastTree(16, 4), [](std::size_t) { return true; });
  CHECK(r16.messages == 15);
  CHECK(r16.max_sends() == 4);
  CHECK(simulate_broadcast(BroadcastTree(5, 4), [](std::size_t) { return true; }).messages == 4);
}

TEST_CASE("simulated broadcast re-parents around an unreachable rank") {
  const BroadcastTree t(16, 4);
  const auto r = simulate_broadcast(t, [](std::size_t rank) { return rank != 1; });
  CHECK(r.unreachable == std::vector<std::size_t>{1});
  CHECK(r.delivered.size() == 14);
  CHECK(r.reparented == 4);  // ranks 4..7 reached through rank 0
  for (std::size_t c : {4u, 5u, 6u, 7u})
    CHECK(std::find(r.delivered.begin(), r.delivered.end(), c) != r.delivered.end());
}

TEST_CASE("band sweeps with ghosts") {
  heat::Grid g = heat::rasterize(heat::reference_scenario(), 20, 12);
  const auto bands = partition(12, 3);
  Band mid = Band::from_grid(g, bands[1]);
  CHECK(mid.rows() == bands[1]);
  CHECK(mid.values().size() == (bands[1].rows + 2) * 20);
  CHECK_THROWS_AS(mid.set_ghost_above(std::vector<double>(19)), DimensionError);
  // A single band over the whole grid sweeps exactly like the serial solver.
  Band whole = Band::from_grid(g, {0, 12});
  heat::Grid serial = g;
  double res = 0.0;
  for (int i = 0; i < 25; ++i) {
    whole.sweep(kernels::active_kernels(), res, [] { return false; });
    heat::gauss_seidel_sweep(serial);
  }
  heat::Grid back = g;
  write_rows(back, {0, 12}, whole.interior());
  CHECK(std::memcmp(back.values().data(), serial.values().data(), back.size() * sizeof(double)) == 0);
  // Abort before the first row leaves the band untouched.
  const auto before = mid.values();
  CHECK_FALSE(mid.sweep(kernels::active_kernels(), res, [] { return true; }));
  CHECK(mid.values() == before);
}

TEST_CASE("gathered bands land in row order") {
  heat::Grid g(6, 8, 0.0);
  const auto bands = partition(8, 4);
  for (std::size_t r = 0; r < bands.size(); ++r) {
    write_rows(g, bands[r], std::vector<double>(bands[r].rows * 6, static_cast<double>(r)));
  }
  for (std::size_t row = 0; row < 8; ++row) CHECK(g.at(row, 3) == static_cast<double>(row / 2));
}

TEST_CASE("W=1 is bitwise identical to the serial solve") {
  const heat::SolverConfig cfg{100000, 1e-4};
  heat::Grid serial = heat::rasterize(heat::reference_scenario(), 75, 75);
  const auto sres = heat::solve(serial, cfg, [] { return false; });
  Cluster c(thread_opts(1));
  heat::Grid par = heat::rasterize(heat::reference_scenario(), 75, 75);
  EpochContext ctx(0);
  std::vector<protocol::ResultFrame> frames;
  const auto pres = c.solve(par, cfg, 0, 0, ctx, [&](const protocol::ResultFrame& f) { frames.push_back(f); });
  CHECK(pres.result.iterations == sres.iterations);
  CHECK(pres.result.converged);
  CHECK(std::memcmp(par.values().data(), serial.values().data(), par.size() * sizeof(double)) == 0);
  REQUIRE_FALSE(frames.empty());
  CHECK(frames.back().field == std::vector<double>(serial.values().begin(), serial.values().end()));
  CHECK(frames.back().iteration == sres.iterations);
}

TEST_CASE("any W reproduces the single-rank solve bit for bit") {
  const double tol = 1e-5;
  const heat::SolverConfig cfg{1000000, tol};
  heat::Grid ref = heat::rasterize(heat::reference_scenario(), 75, 75);
  const auto sres = heat::solve(ref, cfg, [] { return false; });
  std::uint64_t epoch = 1;
  for (std::size_t w : {2u, 3u, 4u}) {
    Cluster c(thread_opts(w));
    heat::Grid g = heat::rasterize(heat::reference_scenario(), 75, 75);
    EpochContext ctx(epoch);
    std::size_t frames = 0;
    const auto r = c.solve(g, cfg, epoch++, 1, ctx, [&](const protocol::ResultFrame& f) {
      ++frames;
      CHECK(f.field.size() == std::size_t{f.width} * f.height);
      CHECK(f.level_index == 1);
    });
    CAPTURE(w);
    CHECK(r.result.converged);
    CHECK(r.result.iterations == sres.iterations);
    CHECK(frames >= 1);
    CHECK(r.sweep_us.size() == w);
    CHECK(max_diff(g, ref) <= 10 * tol);
    CHECK(std::memcmp(g.values().data(), ref.values().data(), g.size() * sizeof(double)) == 0);
    CHECK(c.consistency_errors() == 0);
  }
}

TEST_CASE("one-row bands and uneven splits still match the serial order") {
  // 10 rows over 8 ranks leaves several single-row bands.
  for (std::size_t w : {5u, 8u}) {
    heat::Grid ref = heat::rasterize(heat::reference_scenario(), 23, 10);
    const heat::SolverConfig cfg{5000, 1e-12};
    const auto sres = heat::solve(ref, cfg, [] { return false; });
    Cluster c(thread_opts(w));
    heat::Grid g = heat::rasterize(heat::reference_scenario(), 23, 10);
    EpochContext ctx(3);
    const auto r = c.solve(g, cfg, 3, 0, ctx);
    CAPTURE(w);
    CHECK(r.result.iterations == sres.iterations);
    CHECK(r.result.converged == sres.converged);
    CHECK(std::memcmp(g.values().data(), ref.values().data(), g.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("a capped solve stops every rank at max_iter") {
  heat::Grid ref = heat::rasterize(heat::reference_scenario(), 40, 40);
  const heat::SolverConfig cfg{37, 1e-12};
  heat::solve(ref, cfg, [] { return false; });
  Cluster c(thread_opts(4));
  for (std::uint64_t e : {4u, 5u}) {
    heat::Grid g = heat::rasterize(heat::reference_scenario(), 40, 40);
    EpochContext ctx(e);
    const auto r = c.solve(g, cfg, e, 0, ctx);
    CHECK_FALSE(r.result.converged);
    CHECK(r.result.iterations == 37);
    CHECK(std::memcmp(g.values().data(), ref.values().data(), g.size() * sizeof(double)) == 0);
  }
  heat::Grid g = heat::rasterize(heat::reference_scenario(), 40, 40);
  EpochContext ctx(5);
  CHECK_THROWS_AS(c.solve(g, cfg, 5, 0, ctx), ConfigError);
}

TEST_CASE("thread ranks relay each broadcast with W-1 messages") {
  for (std::size_t w : {1u, 2u, 4u, 5u, 16u, 21u}) {
    Cluster c(thread_opts(w));
    CHECK(c.broadcast_messages() == 0);
    c.broadcast(1, {{"max_iter", std::int64_t{5}}});
    const auto end = std::chrono::steady_clock::now() + 5s;
    while (c.broadcast_messages() < w - 1 && std::chrono::steady_clock::now() < end) std::this_thread::sleep_for(1ms);
    std::this_thread::sleep_for(20ms);
    CAPTURE(w);
    CHECK(c.broadcast_messages() == w - 1);
    c.broadcast(2, {{"max_iter", std::int64_t{6}}});
    const auto end2 = std::chrono::steady_clock::now() + 5s;
    while (c.broadcast_messages() < 2 * (w - 1) && std::chrono::steady_clock::now() < end2) std::this_thread::sleep_for(1ms);
    std::this_thread::sleep_for(20ms);
    CHECK(c.broadcast_messages() == 2 * (w - 1));
  }
}

TEST_CASE("process ranks: spawn, solve, abort on a broadcast, restart, clean up") {
  std::vector<pid_t> pids;
  {
    Cluster c(process_opts(4));
    pids = c.worker_pids();
    REQUIRE(pids.size() == 3);
    for (pid_t p : pids) CHECK(alive(p));

    const heat::SolverConfig slow{1000000, 1e-12};
    heat::Grid g0 = heat::rasterize(heat::reference_scenario(), 300, 300);
    const heat::Grid untouched = g0;
    EpochContext ctx0(0);
    std::vector<std::uint64_t> epochs0;
    ParallelResult r0;
    std::thread t([&] {
      r0 = c.solve(g0, slow, 0, 2, ctx0, [&](const protocol::ResultFrame& f) { epochs0.push_back(f.epoch); });
    });
    std::this_thread::sleep_for(400ms);
    c.broadcast(1, {{"max_iter", std::int64_t{1000}}});
    ctx0.request_abort();
    t.join();
    CHECK(r0.result.aborted);
    CHECK(g0 == untouched);
    for (auto e : epochs0) CHECK(e == 0);

    heat::Grid g1 = heat::rasterize(heat::reference_scenario(), 150, 150);
    EpochContext ctx1(1);
    std::vector<std::uint64_t> epochs1;
    const auto r1 = c.solve(g1, heat::SolverConfig{1000000, 1e-4}, 1, 1, ctx1,
                            [&](const protocol::ResultFrame& f) { epochs1.push_back(f.epoch); });
    CHECK(r1.result.converged);
    REQUIRE_FALSE(epochs1.empty());
    for (auto e : epochs1) CHECK(e == 1);
    CHECK(c.consistency_errors() == 0);
    CHECK(r1.sweep_us.size() == 4);

    // Same answer as four thread ranks.
    Cluster th(thread_opts(4));
    heat::Grid g2 = heat::rasterize(heat::reference_scenario(), 150, 150);
    EpochContext ctx2(1);
    th.solve(g2, heat::SolverConfig{1000000, 1e-4}, 1, 1, ctx2);
    CHECK(g1 == g2);
  }
  std::this_thread::sleep_for(100ms);
  for (pid_t p : pids) CHECK_FALSE(alive(p));
}

TEST_CASE("bad options") {
  ClusterOptions o = thread_opts(0);
  CHECK_THROWS_AS(Cluster{o}, ConfigError);
  ClusterOptions p = process_opts(2);
  p.worker_exe = "/nonexistent/steer";
  CHECK_THROWS(Cluster{p});
}
