#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steer/heat/scenario.hpp"
#include "steer/hierarchy/levels.hpp"

namespace steer::app {

struct BenchOptions {
  std::vector<double> ticks_ms{1.0, 2.0, 5.0};
  /// Wall time of one repetition; every setting runs inside it, in short
  /// interleaved slots, so machine drift hits all settings alike.
  std::chrono::milliseconds repetition{30000};
  std::chrono::milliseconds slot{1500};
  int repetitions = 5;
  heat::Scenario scenario = heat::reference_scenario();
  hierarchy::Dims dims{300, 300};
  double tolerance = 1e-3;
  /// Tick (ms) -> allowed median overhead (%).
  std::map<double, double> limits{{1.0, 15.0}, {5.0, 10.0}};
};

struct SettingResult {
  std::string name;             // "disabled", "disabled_repeat", "tick_5ms", ...
  std::optional<double> tick_ms;  // empty: steering compiled out of the loop
  std::vector<double> sweeps_per_s;  // per repetition
  std::vector<double> overhead_pct;  // per repetition, against "disabled"
  double median_overhead_pct = 0.0;
  std::optional<double> limit_pct;
  bool breach = false;
};

struct BenchReport {
  std::vector<SettingResult> settings;
  int repetitions = 0;
  double repetition_s = 0.0;
  bool breach = false;

  std::string to_text() const;
  std::string to_json() const;
};

/// Runs the reference heat solve (cold start, restarted whenever it
/// converges) with steering compiled out and with a steered loop at each
/// tick, and reports throughput ratios against the unsteered loop.
BenchReport benchmark_overhead(const BenchOptions& opts);

}  // namespace steer::app
