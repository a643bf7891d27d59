// Acceptance run: one line per criterion, nonzero exit if any fails.
//
// Development overrides (shorter than the real targets; the line says so):
//   STEER_BENCH_SECONDS, STEER_BENCH_REPS  overhead bench length
//   STEER_CHAOS_SECONDS                    chaos run length
//   STEER_ONLY=1,5,8                       run a subset

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "message_gen.hpp"
#include "oracles.hpp"
#include "process_util.hpp"
#include "steer/app/client.hpp"
#include "steer/app/server.hpp"
#include "steer/cluster/coordinator.hpp"
#include "steer/cluster/topology.hpp"
#include "steer/core/steering.hpp"
#include "steer/heat/scenario.hpp"
#include "steer/heat/solver.hpp"
#include "steer/hierarchy/transfer.hpp"
#include "steer/protocol/codec.hpp"
#include "steer/sched/scheduler.hpp"

using namespace steer;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  enum Kind { Pass, Fail, Skip } kind = Fail;
  std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

double env_number(const char* name, double fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::atof(v) : fallback;
}

std::string num(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

bool never() { return false; }

double max_diff(const heat::Grid& a, const heat::Grid& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

// 1. Overhead of the steered loop against the unsteered one.
Verdict overhead() {
  const double seconds = env_number("STEER_BENCH_SECONDS", 30);
  const int reps = static_cast<int>(env_number("STEER_BENCH_REPS", 5));
  const auto json_path = fs::temp_directory_path() / "steer_acceptance_bench.json";
  std::ostringstream cmd;
  cmd << "bench --duration " << seconds << " --reps " << reps << " --ticks 1,2,5 --json " << json_path.string();
  const auto r = testing::run(cmd.str());
  if (r.rc != 0 && r.rc != 4) return verdict(false, "bench exited " + std::to_string(r.rc) + ": " + r.out);
  std::ifstream in(json_path);
  const auto j = nlohmann::json::parse(in);
  fs::remove(json_path);
  double t1 = NAN, t5 = NAN;
  std::string all;
  for (const auto& s : j["settings"]) {
    const std::string name = s["name"];
    const double med = s["median_overhead_pct"];
    if (name == "tick_1ms") t1 = med;
    if (name == "tick_5ms") t5 = med;
    all += " " + name + "=" + num(med, 3) + "%";
  }
  const bool breach = j["breach"];
  const bool ok = t5 <= 10.0 && t1 <= 15.0 && !breach && (r.rc == 0);
  std::string d = "median overhead tick_5ms " + num(t5, 3) + "% (<= 10), tick_1ms " + num(t1, 3) +
                  "% (<= 15);" + all + "; " + std::to_string(reps) + " x " + num(seconds) + " s";
  if (seconds < 30 || reps < 5) d += " [shortened run, target is 5 x 30 s]";
  return verdict(ok, d);
}

// 2. Update receipt to new epoch, and rows run after an abort.
Verdict restart_latency() {
  Registry reg;
  reg.register_steerable("k", VarKind::Int, std::int64_t{0});
  const auto tick = 5ms;
  double row_us = 0.0;
  {
    heat::Grid g = heat::rasterize(heat::reference_scenario(), 300, 300);
    const auto t0 = Clock::now();
    heat::solve(g, heat::SolverConfig{200, 1e-300}, never);
    row_us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count() / (200.0 * 298);
  }
  Steering s(reg, TickConfig{tick});
  std::atomic<std::int64_t> hook_ns{0};
  std::mutex mu;
  std::vector<int> late_rows;
  s.set_apply_hook([&](std::uint64_t, const std::vector<Assignment>&) {
    hook_ns = Clock::now().time_since_epoch().count();
  });
  std::exception_ptr failure;
  std::thread runner([&] {
    try {
      s.run_steered([&](const Snapshot&, EpochContext& ctx) -> std::uint64_t {
        heat::Grid g = heat::rasterize(heat::reference_scenario(), 300, 300);
        int late = 0;
        auto check = [&] {
          if (ctx.should_abort()) return true;
          const auto h = hook_ns.load();
          if (h != 0 && Clock::now().time_since_epoch().count() > h && ctx.abort_requested()) ++late;
          return false;
        };
        const auto res = heat::solve(g, heat::SolverConfig{1000000, 1e-300}, check);
        std::lock_guard lock(mu);
        late_rows.push_back(late);
        return res.iterations;
      });
    } catch (...) {
      failure = std::current_exception();
    }
  });
  const auto wait_for = [](auto pred, std::chrono::milliseconds limit) {
    const auto end = Clock::now() + limit;
    while (!pred() && Clock::now() < end) std::this_thread::sleep_for(1ms);
    return pred();
  };
  wait_for([&] { return s.running_epoch().has_value(); }, 5s);
  std::mt19937_64 rng(2);
  const std::size_t updates = 100;
  for (std::size_t i = 1; i <= updates; ++i) {
    std::this_thread::sleep_for(std::chrono::microseconds(10000 + rng() % 40000));
    s.submit({{{"k", static_cast<std::int64_t>(i)}}});
  }
  wait_for([&] { return s.stats().restart_latency_us.size() >= updates; }, 10s);
  s.stop();
  runner.join();
  if (failure) std::rethrow_exception(failure);
  const auto st = s.stats();
  std::vector<double> lat(st.restart_latency_us.begin(), st.restart_latency_us.end());
  const double bound = 2.0 * std::chrono::duration<double, std::micro>(tick).count() + row_us;
  const double p95 = testing::percentile(lat, 0.95);
  int worst_late = 0;
  {
    std::lock_guard lock(mu);
    for (int l : late_rows) worst_late = std::max(worst_late, l);
  }
  const bool ok = lat.size() >= updates && p95 <= bound && worst_late <= 1;
  return verdict(ok, std::to_string(lat.size()) + " restarts, p95 " + num(p95) + " us (<= " + num(bound, 6) +
                         " us = 2 x tick + row), most rows after an abort " + std::to_string(worst_late) +
                         " (<= 1)");
}

// 3. Seeding the finest level from the coarser ones.
Verdict multilevel_speedup() {
  const heat::Scenario ref = heat::reference_scenario();
  const heat::SolverConfig cfg{2000000, 1e-5};
  const auto cascade = hierarchy::solve_cascade(ref, hierarchy::LevelSpec{}, cfg);
  heat::Grid cold = heat::rasterize(ref, 300, 300);
  const auto cold_res = heat::solve(cold, cfg, never);
  const auto seeded = cascade.back().result.iterations;
  const double ratio = double(seeded) / double(cold_res.iterations);

  std::mt19937_64 rng(7);
  int fewer = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const heat::Scenario s = testing::random_warm_scene(rng);
    const auto levels = hierarchy::solve_cascade(s, hierarchy::LevelSpec::parse("75x75,150x150"), cfg);
    heat::Grid c = heat::rasterize(s, 150, 150);
    const auto r = heat::solve(c, cfg, never);
    if (levels.back().result.converged && r.converged && levels.back().result.iterations < r.iterations) ++fewer;
  }
  const bool ok = cascade.back().result.converged && cold_res.converged && ratio <= 0.6 && fewer >= 18;
  return verdict(ok, "reference 300x300 at tol 1e-5: seeded " + std::to_string(seeded) + " vs cold " +
                         std::to_string(cold_res.iterations) + " sweeps, ratio " + num(ratio, 3) +
                         " (<= 0.6); random scenes with fewer sweeps " + std::to_string(fewer) + "/20 (>= 18)");
}

// 4. Differences of the coarser levels from the finest.
Verdict level_errors() {
  const heat::Scenario ref = heat::reference_scenario();
  const auto levels = hierarchy::solve_cascade(ref, hierarchy::LevelSpec{}, heat::SolverConfig{4000000, 1e-6});
  for (const auto& l : levels) {
    if (!l.result.converged) return verdict(false, "a level did not converge");
  }
  const double mid = hierarchy::level_error(levels[1].solution, levels[2].solution, ref);
  const double coarse = hierarchy::level_error(levels[0].solution, levels[2].solution, ref);
  const bool ok = mid >= 0.01 && mid <= 0.10 && coarse >= 0.05 && coarse <= 0.30 && coarse >= mid;
  return verdict(ok, "150x150 vs 300x300 " + num(100 * mid, 3) + "% (1..10%), 75x75 vs 300x300 " +
                         num(100 * coarse, 3) + "% (5..30%), coarse >= intermediate");
}

// 5. Burst of drags against a default four-rank server, through the CLI.
const char* kBurst =
    "at 0 move_source 1 0.30 0.36\n"
    "at 100 move_source 1 0.30 0.37\n"
    "at 200 move_source 1 0.30 0.38\n"
    "at 300 move_source 1 0.30 0.39\n"
    "at 400 move_source 1 0.30 0.40\n"
    "at 500 move_source 1 0.30 0.41\n"
    "at 600 move_source 1 0.30 0.42\n"
    "at 700 move_source 1 0.30 0.43\n"
    "at 750 expect_level 0 1000\n"
    "at 800 expect_level 2 8000\n";

Verdict burst_levels() {
  const auto script = testing::write_temp("steer_acceptance_burst.txt", kBurst);
  const auto tr = fs::temp_directory_path() / "steer_acceptance_burst.log";
  const std::vector<std::uint32_t> want{2, 0, 1, 2};
  std::string seen;
  bool ok = true;
  const std::regex level_re(R"( recv LevelSwitch level=(\d+))");
  for (int run = 0; run < 2; ++run) {
    testing::Serve srv({"--listen", "127.0.0.1:0", "--workers", "4"});
    if (srv.address.empty()) return verdict(false, "server did not start");
    const auto r = testing::run("script " + script.string() + " --connect " + srv.address +
                                " --linger-ms 300 --transcript " + tr.string());
    srv.terminate();
    std::ifstream in(tr);
    std::vector<std::uint32_t> got;
    for (std::string line; std::getline(in, line);) {
      std::smatch m;
      if (std::regex_search(line, m, level_re)) got.push_back(static_cast<std::uint32_t>(std::stoul(m[1])));
    }
    std::string text;
    for (auto l : got) text += std::to_string(l) + " ";
    seen += " run " + std::to_string(run + 1) + ": [" + text + "] rc " + std::to_string(r.rc) + ";";
    ok = ok && r.rc == 0 && got == want;
  }
  fs::remove(script);
  fs::remove(tr);
  return verdict(ok, "4 process ranks, 300/150/75 ladder, expected [2 0 1 2];" + seen);
}

// 6. Phase counts against exhaustive search, and random trees.
Verdict scheduler() {
  std::string d;
  bool ok = true;
  for (std::size_t P : {1u, 4u, 8u, 64u}) {
    const std::size_t h1 = sched::schedule(sched::TaskTree::complete_octree(1), P).phases.size();
    const auto d2 = sched::TaskTree::complete_octree(2);
    const std::size_t h2 = sched::schedule(d2, P).phases.size(), b2 = testing::min_phases_bruteforce(d2, P);
    const std::size_t h3 = sched::schedule(sched::TaskTree::complete_octree(3), P).phases.size(),
                      b3 = testing::min_phases_depth3(P);
    ok = ok && h1 == 1 && h2 == b2 && h3 == b3;
    d += " P=" + std::to_string(P) + ": " + std::to_string(h1) + "/1 " + std::to_string(h2) + "/" +
         std::to_string(b2) + " " + std::to_string(h3) + "/" + std::to_string(b3) + ";";
  }
  std::mt19937_64 rng(1000);
  int valid = 0, no_worse = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto t = sched::TaskTree::random(rng, 4, 1.0, 100.0);
    const std::size_t P = 1 + rng() % 16;
    const auto s = sched::schedule(t, P);
    const auto naive = sched::naive_level_schedule(t, P);
    if (!sched::validate(s, t)) ++valid;
    if (sched::phase_fullness(s, t).aggregate >= sched::phase_fullness(naive, t).aggregate) ++no_worse;
  }
  ok = ok && valid == 1000 && no_worse == 1000;
  return verdict(ok, "phases heuristic/minimum at depth 1,2,3;" + d + " random trees valid " +
                         std::to_string(valid) + "/1000, fullness >= naive " + std::to_string(no_worse) + "/1000");
}

// 7. Tier index of every level in trees up to six deep.
Verdict processing_order() {
  int checked = 0, wrong = 0;
  for (std::uint32_t H = 1; H <= 6; ++H) {
    for (std::uint32_t M = 0; M < H; ++M) {
      ++checked;
      if (sched::processing_order(M, H) != H - M - 1) ++wrong;
    }
  }
  return verdict(wrong == 0, std::to_string(checked) + " (depth, level) pairs, " + std::to_string(wrong) + " wrong");
}

// 8a. The same converged field from one, two and four ranks.
std::string distributed_agreement(bool& ok) {
  const double tol = 1e-5;
  const heat::SolverConfig cfg{2000000, tol};
  heat::Grid serial = heat::rasterize(heat::reference_scenario(), 300, 300);
  heat::solve(serial, cfg, never);
  std::vector<heat::Grid> fields;
  std::string d;
  for (std::size_t w : {1u, 2u, 4u}) {
    cluster::ClusterOptions o;
    o.workers = w;
    o.mode = cluster::ClusterOptions::Mode::Process;
    o.worker_exe = STEER_EXE;
    cluster::Cluster c(o);
    heat::Grid g = heat::rasterize(heat::reference_scenario(), 300, 300);
    EpochContext ctx(1);
    const auto t0 = Clock::now();
    const auto r = c.solve(g, cfg, 1, 2, ctx);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    ok = ok && r.result.converged && c.consistency_errors() == 0;
    d += " W=" + std::to_string(w) + " " + std::to_string(r.result.iterations) + " sweeps " + num(secs, 3) + " s;";
    fields.push_back(std::move(g));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    worst = std::max(worst, max_diff(fields[i], serial));
    for (std::size_t k = i + 1; k < fields.size(); ++k) worst = std::max(worst, max_diff(fields[i], fields[k]));
  }
  ok = ok && worst <= 10 * tol;
  return "300x300 tol 1e-5, process ranks:" + d + " max difference " + num(worst, 3) + " (<= 1e-4)";
}

// 8b. Broadcast relays: W - 1 messages, simulated and on real thread ranks.
std::string broadcast_counts(bool& ok) {
  int sim_ok = 0, real_ok = 0;
  for (std::size_t w = 1; w <= 64; ++w) {
    const auto r = cluster::simulate_broadcast(cluster::BroadcastTree(w, 4), [](std::size_t) { return true; });
    if (r.messages == w - 1) ++sim_ok;
    cluster::ClusterOptions o;
    o.workers = w;
    o.mode = cluster::ClusterOptions::Mode::Thread;
    cluster::Cluster c(o);
    c.broadcast(1, {{"max_iter", std::int64_t{5}}});
    const auto end = Clock::now() + 5s;
    while (c.broadcast_messages() < w - 1 && Clock::now() < end) std::this_thread::sleep_for(1ms);
    std::this_thread::sleep_for(10ms);
    if (c.broadcast_messages() == w - 1) ++real_ok;
  }
  ok = ok && sim_ok == 64 && real_ok == 64;
  return " broadcast == W-1 for W 1..64: simulated " + std::to_string(sim_ok) + "/64, thread ranks " +
         std::to_string(real_ok) + "/64";
}

// 8c. Random steering traffic against a four-rank process server.
std::string chaos(bool& ok) {
  const double seconds = env_number("STEER_CHAOS_SECONDS", 600);
  app::Config cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.workers = 4;
  cfg.mode = "process";
  app::Server server(cfg, STEER_EXE);
  std::thread loop([&] { server.run(); });
  std::uint64_t sent = 0, frames = 0, bad_size = 0, backwards = 0, max_epoch = 0;
  std::string error;
  try {
    app::SteeringClient client(server.address());
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pos(0.1, 0.9), temp(0.0, 120.0), unit(0.0, 1.0);
    const auto end = Clock::now() + std::chrono::duration<double>(seconds);
    while (Clock::now() < end && client.connected()) {
      const double roll = unit(rng);
      if (roll < 0.3) {
        client.send(protocol::ParamUpdate{"max_iter", static_cast<std::int64_t>(500 + rng() % 200000)});
      } else if (roll < 0.45) {
        client.send(protocol::ParamUpdate{"tolerance", std::pow(10.0, -2.0 - 4.0 * unit(rng))});
      } else {
        protocol::GeometryUpdate g;
        g.op = heat::EditOp::Move;
        g.entity = rng() % 2 ? heat::EntityClass::HeatSource : heat::EntityClass::BoundaryPoint;
        g.id = g.entity == heat::EntityClass::HeatSource ? 1 + rng() % 3 : 1 + rng() % 2;
        g.x = pos(rng);
        g.y = pos(rng);
        if (rng() % 3 == 0) g.temperature = temp(rng);
        client.send(g);
      }
      ++sent;
      // Mostly drag-like bursts, sometimes a pause long enough to refine.
      const double gap = unit(rng) < 0.9 ? 5.0 + 300.0 * unit(rng) : 1000.0 + 5000.0 * unit(rng);
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(gap));
    }
    std::this_thread::sleep_for(1s);
    if (!client.connected()) error = "client lost the connection";
    const auto levels = hierarchy::LevelSpec{};
    for (const auto& e : client.transcript()) {
      if (e.sent || e.type != protocol::MsgType::ResultFrame) continue;
      ++frames;
      if (*e.epoch < max_epoch) ++backwards;
      max_epoch = std::max(max_epoch, *e.epoch);
      const auto dims = levels.at(*e.level);
      if (e.detail != std::to_string(dims.width) + "x" + std::to_string(dims.height)) ++bad_size;
    }
    client.bye();
  } catch (const std::exception& ex) {
    error = ex.what();
  }
  const auto mixed = server.consistency_errors();
  server.stop();
  loop.join();
  ok = ok && error.empty() && mixed == 0 && backwards == 0 && bad_size == 0 && frames > 0;
  std::string d = " chaos " + num(seconds) + " s: " + std::to_string(sent) + " injections, " + std::to_string(frames) +
                  " frames up to epoch " + std::to_string(max_epoch) + ", mixed-epoch " + std::to_string(mixed) +
                  ", epoch regressions " + std::to_string(backwards) + ", wrong frame sizes " +
                  std::to_string(bad_size);
  if (!error.empty()) d += ", error: " + error;
  if (seconds < 600) d += " [shortened run, target is 600 s]";
  return d;
}

Verdict distributed() {
  bool ok = true;
  std::string d = distributed_agreement(ok) + ";";
  d += broadcast_counts(ok) + ";";
  d += chaos(ok);
  return verdict(ok, d);
}

// 9. Codec round trips, fuzzing and the fixed Ack layout.
Verdict protocol_codec() {
  testing::MessageGen gen(9);
  std::size_t round_trips = 0;
  for (int i = 0; i < 100000; ++i) {
    const protocol::Message m = gen.next();
    const auto b = protocol::encode(m);
    const auto r = protocol::decode(b);
    if (r.ok() && r.consumed == b.size() && *r.message == m) ++round_trips;
  }
  std::mt19937_64 rng(10);
  testing::MessageGen mut(11);
  std::size_t accepted = 0, overrun = 0;
  for (int i = 0; i < 1000000; ++i) {
    protocol::Bytes b;
    if (i % 2) {
      b.resize(rng() % 96);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
      if (i % 4 == 1 && b.size() >= 4) std::copy(protocol::kMagic.begin(), protocol::kMagic.end(), b.begin());
    } else {
      b = protocol::encode(mut.next());
      for (int k = 0; k < 3; ++k) b[rng() % b.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    }
    const auto r = protocol::decode(b);
    if (r.ok()) {
      ++accepted;
      if (r.consumed > b.size()) ++overrun;
      protocol::encode(*r.message);
    }
  }
  const protocol::Bytes golden{0x53, 0x54, 0x45, 0x52, 0x01, 0x00, 0x07, 0x00,
                               0x04, 0x00, 0x00, 0x00, 0x07, 0x00, 0x00, 0x00};
  const bool golden_ok = protocol::encode(protocol::Ack{7}) == golden;
  const bool ok = round_trips == 100000 && overrun == 0 && golden_ok;
  return verdict(ok, "round trips " + std::to_string(round_trips) + "/100000; 1000000 fuzz decodes without a crash (" +
                         std::to_string(accepted) + " decoded, " + std::to_string(overrun) +
                         " overruns); Ack{7} bytes " + (golden_ok ? "match" : "differ"));
}

// 10. Dense 4x4 reference and the discrete maximum principle.
Verdict solver() {
  heat::Grid g(4, 4, 0.0);
  const double top[4] = {1, 2, 3, 4}, bottom[4] = {-1, 5, 7, 2}, left[2] = {9, -4}, right[2] = {6, 0.5};
  for (std::size_t c = 0; c < 4; ++c) {
    g.fix(0, c, top[c]);
    g.fix(3, c, bottom[c]);
  }
  for (std::size_t r = 1; r < 3; ++r) {
    g.fix(r, 0, left[r - 1]);
    g.fix(r, 3, right[r - 1]);
  }
  const auto x = testing::dense_solve({{4, -1, -1, 0}, {-1, 4, 0, -1}, {-1, 0, 4, -1}, {0, -1, -1, 4}},
                                      {top[1] + left[0], top[2] + right[0], bottom[1] + left[1], bottom[2] + right[1]});
  heat::solve(g, heat::SolverConfig{10000, 1e-15}, never);
  const double dense_err = std::max({std::abs(g.at(1, 1) - x[0]), std::abs(g.at(1, 2) - x[1]),
                                     std::abs(g.at(2, 1) - x[2]), std::abs(g.at(2, 2) - x[3])});

  std::mt19937_64 rng(100);
  std::uniform_int_distribution<int> nsrc(1, 5), nb(0, 4), sweeps(1, 300);
  int held = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const heat::Scenario s = testing::random_scene(rng, nsrc(rng), nb(rng));
    heat::Grid f = heat::rasterize(s, 40, 40);
    const auto [lo, hi] = testing::fixed_range(f);
    const double ilo = std::min(lo, 0.0), ihi = std::max(hi, 0.0);
    bool ok = true;
    const int n = sweeps(rng);
    for (int i = 0; i < n; ++i) heat::gauss_seidel_sweep(f);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.mask()[i] && (f.values()[i] < ilo || f.values()[i] > ihi)) ok = false;
    }
    heat::solve(f, heat::SolverConfig{200000, 1e-10}, never);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.mask()[i] && (f.values()[i] < lo - 1e-8 || f.values()[i] > hi + 1e-8)) ok = false;
    }
    if (ok) ++held;
  }
  return verdict(dense_err <= 1e-10 && held == 100, "4x4 max error " + num(dense_err, 3) +
                                                        " (<= 1e-10); maximum principle held " +
                                                        std::to_string(held) + "/100");
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  std::set<int> only;
  if (const char* o = std::getenv("STEER_ONLY")) {
    std::stringstream in(o);
    for (std::string tok; std::getline(in, tok, ',');) {
      if (!tok.empty()) only.insert(std::stoi(tok));
    }
  }
  const std::vector<Criterion> criteria{
      {1, "steering overhead", overhead},
      {2, "restart latency", restart_latency},
      {3, "multilevel speedup", multilevel_speedup},
      {4, "level error magnitudes", level_errors},
      {5, "hierarchy policy burst", burst_levels},
      {6, "scheduler optimality", scheduler},
      {7, "processing order", processing_order},
      {8, "distributed correctness", distributed},
      {9, "protocol codec", protocol_codec},
      {10, "solver correctness", solver},
      {11, "UI (secondary)", [] { return Verdict{Verdict::Skip, "browser front end is not part of this build"}; }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const char* tag = v.kind == Verdict::Pass ? "PASS" : v.kind == Verdict::Skip ? "SKIP" : "FAIL";
    if (v.kind == Verdict::Fail) ++failed;
    std::cout << tag << " " << c.id << " " << c.name << ": " << v.detail << " (" << num(secs, 3) << " s)"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
