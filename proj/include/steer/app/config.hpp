#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "steer/core/steering.hpp"
#include "steer/heat/scenario.hpp"
#include "steer/heat/solver.hpp"
#include "steer/hierarchy/levels.hpp"

namespace steer::app {

/// Server settings. The file grammar is `key = value` per line with `#`
/// comments; the keys are the field names below and each one is also a
/// command-line flag `--key value`.
struct Config {
  double tick_ms = 5.0;
  hierarchy::LevelSpec levels;
  double tau_fast_ms = 500.0;
  double tau_idle_ms = 2000.0;
  std::size_t workers = 1;
  std::size_t fanout = 4;
  std::string listen = "127.0.0.1:7420";
  std::string scenario;  // empty: the built-in reference scene
  std::uint64_t max_iter = 200000;
  double tolerance = 1e-3;
  std::string web_root;  // empty: built-in page
  std::string mode = "process";  // worker ranks as processes or threads
  double gather_ms = 100.0;

  static const std::vector<std::string>& keys();

  /// Throws ConfigError for an unknown key or an unparsable value.
  void set(std::string_view key, std::string_view value);
  /// Ranges, and that referenced files exist. Throws ConfigError.
  void validate() const;
  std::string to_text() const;

  TickConfig tick() const;
  hierarchy::LevelPolicy policy() const;
  heat::SolverConfig solver() const;
  /// Loads `scenario` or returns the reference scene.
  heat::Scenario load_scenario() const;
};

Config parse_config(std::string_view text);
Config load_config(const std::string& path);

}  // namespace steer::app
