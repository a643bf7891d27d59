#include "steer/app/bench.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "steer/core/registry.hpp"
#include "steer/core/steering.hpp"
#include "steer/heat/solver.hpp"

namespace steer::app {
namespace {

using Clock = std::chrono::steady_clock;

struct Tally {
  std::uint64_t sweeps = 0;
  double seconds = 0.0;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Sweeps until `end`, starting over from `cold` each time the solve
/// converges. The two variants differ only in the abort check.
template <class Check>
Tally sweep_until(const heat::Grid& cold, double tol, Clock::time_point end, Check& check) {
  const auto& k = kernels::active_kernels();
  heat::Grid g = cold;
  std::vector<double> scratch(g.width());
  Tally t;
  const auto t0 = Clock::now();
  for (;;) {
    double residual = 0.0;
    if (!heat::detail::sweep_rows(g, 1, g.height() - 1, k, scratch, residual, check)) break;
    ++t.sweeps;
    if (residual <= tol) std::copy(cold.values().begin(), cold.values().end(), g.values().begin());
    if (Clock::now() >= end) break;
  }
  t.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return t;
}

Tally run_unsteered(const heat::Grid& cold, double tol, std::chrono::milliseconds slot) {
  auto never = []() noexcept { return false; };
  return sweep_until(cold, tol, Clock::now() + slot, never);
}

Tally run_steered(const heat::Grid& cold, double tol, std::chrono::milliseconds slot,
                  double tick_ms) {
  Registry reg;
  reg.register_steerable("tolerance", VarKind::Float, tol);
  TickConfig tick;
  tick.interval = std::chrono::microseconds(static_cast<std::int64_t>(std::llround(tick_ms * 1000)));
  Steering steering(reg, tick);
  Tally t;
  steering.run_steered([&](const Snapshot&, EpochContext& ctx) -> std::uint64_t {
    auto check = [&ctx]() noexcept { return ctx.should_abort(); };
    t = sweep_until(cold, tol, Clock::now() + slot, check);
    steering.stop();
    return t.sweeps;
  });
  return t;
}

}  // namespace

BenchReport benchmark_overhead(const BenchOptions& opts) {
  struct Setting {
    std::string name;
    std::optional<double> tick;
  };
  std::vector<Setting> settings{{"disabled", std::nullopt}, {"disabled_repeat", std::nullopt}};
  for (double t : opts.ticks_ms) {
    std::ostringstream n;
    n << "tick_" << t << "ms";
    settings.push_back({n.str(), t});
  }
  const heat::Grid cold = heat::rasterize(opts.scenario, opts.dims.width, opts.dims.height);
  const std::size_t rounds = std::max<std::size_t>(
      1, static_cast<std::size_t>(opts.repetition / (opts.slot * settings.size())));

  BenchReport report;
  report.repetitions = opts.repetitions;
  report.settings.resize(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    report.settings[i].name = settings[i].name;
    report.settings[i].tick_ms = settings[i].tick;
    if (settings[i].tick) {
      if (auto it = opts.limits.find(*settings[i].tick); it != opts.limits.end()) {
        report.settings[i].limit_pct = it->second;
      }
    }
  }
  const auto bench_start = Clock::now();
  for (int rep = 0; rep < opts.repetitions; ++rep) {
    std::vector<Tally> tally(settings.size());
    for (std::size_t round = 0; round < rounds; ++round) {
      for (std::size_t j = 0; j < settings.size(); ++j) {
        // Rotate the starting setting every round.
        const std::size_t i = (j + round + static_cast<std::size_t>(rep)) % settings.size();
        const Tally t = settings[i].tick
                            ? run_steered(cold, opts.tolerance, opts.slot, *settings[i].tick)
                            : run_unsteered(cold, opts.tolerance, opts.slot);
        tally[i].sweeps += t.sweeps;
        tally[i].seconds += t.seconds;
      }
    }
    const double base = static_cast<double>(tally[0].sweeps) / tally[0].seconds;
    for (std::size_t i = 0; i < settings.size(); ++i) {
      const double rate = static_cast<double>(tally[i].sweeps) / tally[i].seconds;
      report.settings[i].sweeps_per_s.push_back(rate);
      report.settings[i].overhead_pct.push_back(100.0 * (base / rate - 1.0));
    }
    spdlog::info("bench repetition {}/{} done", rep + 1, opts.repetitions);
  }
  report.repetition_s =
      std::chrono::duration<double>(Clock::now() - bench_start).count() / std::max(1, opts.repetitions);
  for (auto& s : report.settings) {
    s.median_overhead_pct = median(s.overhead_pct);
    s.breach = s.limit_pct && s.median_overhead_pct > *s.limit_pct;
    report.breach = report.breach || s.breach;
  }
  return report;
}

std::string BenchReport::to_text() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "steering overhead, " << repetitions << " repetitions of " << repetition_s
      << " s, median over repetitions\n";
  out << "setting            sweeps/s  overhead%  limit%  status\n";
  for (const auto& s : settings) {
    out << s.name;
    for (std::size_t i = s.name.size(); i < 18; ++i) out << ' ';
    out << ' ';
    out.width(8);
    out << median(s.sweeps_per_s) << "  ";
    out.width(9);
    out << s.median_overhead_pct << "  ";
    if (s.limit_pct) {
      out.width(6);
      out << *s.limit_pct;
    } else {
      out << "     -";
    }
    out << "  " << (s.limit_pct ? (s.breach ? "BREACH" : "ok") : "-") << '\n';
  }
  return out.str();
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["repetitions"] = repetitions;
  j["repetition_s"] = repetition_s;
  j["breach"] = breach;
  for (const auto& s : settings) {
    nlohmann::json e;
    e["name"] = s.name;
    e["tick_ms"] = s.tick_ms ? nlohmann::json(*s.tick_ms) : nlohmann::json(nullptr);
    e["sweeps_per_s"] = s.sweeps_per_s;
    e["overhead_pct"] = s.overhead_pct;
    e["median_overhead_pct"] = s.median_overhead_pct;
    e["limit_pct"] = s.limit_pct ? nlohmann::json(*s.limit_pct) : nlohmann::json(nullptr);
    e["breach"] = s.breach;
    j["settings"].push_back(e);
  }
  return j.dump(2);
}

}  // namespace steer::app
