#include "steer/app/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steer/error.hpp"
#include "steer/protocol/transport.hpp"

namespace steer::app {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(out)) {
    throw ConfigError(std::string(key) + ": expected a number, got `" + s + "`");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got `" +
                      std::string(v) + "`");
  }
  return out;
}

std::chrono::microseconds ms_to_us(double ms) {
  return std::chrono::microseconds(static_cast<std::int64_t>(std::llround(ms * 1000.0)));
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k{"tick_ms",   "levels",   "tau_fast_ms", "tau_idle_ms",
                                          "workers",   "fanout",   "listen",      "scenario",
                                          "max_iter",  "tolerance", "web_root",   "mode",
                                          "gather_ms"};
  return k;
}

void Config::set(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  if (key == "tick_ms") {
    tick_ms = to_double(key, v);
  } else if (key == "levels") {
    try {
      levels = hierarchy::LevelSpec::parse(v);
    } catch (const Error& e) {
      throw ConfigError(std::string("levels: ") + e.what());
    }
  } else if (key == "tau_fast_ms") {
    tau_fast_ms = to_double(key, v);
  } else if (key == "tau_idle_ms") {
    tau_idle_ms = to_double(key, v);
  } else if (key == "workers") {
    workers = to_uint(key, v);
  } else if (key == "fanout") {
    fanout = to_uint(key, v);
  } else if (key == "listen") {
    listen = v;
  } else if (key == "scenario") {
    scenario = v;
  } else if (key == "max_iter") {
    max_iter = to_uint(key, v);
  } else if (key == "tolerance") {
    tolerance = to_double(key, v);
  } else if (key == "web_root") {
    web_root = v;
  } else if (key == "mode") {
    mode = v;
  } else if (key == "gather_ms") {
    gather_ms = to_double(key, v);
  } else {
    throw ConfigError("unknown config key `" + std::string(key) + "`");
  }
}

void Config::validate() const {
  tick().validate();
  policy().validate();
  solver().validate();
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (fanout < 2) throw ConfigError("fanout must be at least 2");
  if (workers > levels.at(0).height) {
    throw ConfigError("more workers than rows on the coarsest level");
  }
  if (mode != "process" && mode != "thread") {
    throw ConfigError("mode must be `process` or `thread`");
  }
  if (!(gather_ms > 0.0)) throw ConfigError("gather_ms must be positive");
  protocol::Address::parse(listen);
  if (!scenario.empty() && !std::filesystem::is_regular_file(scenario)) {
    throw ConfigError("scenario file `" + scenario + "` does not exist");
  }
  if (!web_root.empty() && !std::filesystem::is_directory(web_root)) {
    throw ConfigError("web_root `" + web_root + "` is not a directory");
  }
}

std::string Config::to_text() const {
  std::ostringstream out;
  out << "tick_ms = " << tick_ms << '\n'
      << "levels = " << levels.to_string() << '\n'
      << "tau_fast_ms = " << tau_fast_ms << '\n'
      << "tau_idle_ms = " << tau_idle_ms << '\n'
      << "workers = " << workers << '\n'
      << "fanout = " << fanout << '\n'
      << "listen = " << listen << '\n'
      << "scenario = " << scenario << '\n'
      << "max_iter = " << max_iter << '\n'
      << "tolerance = " << tolerance << '\n'
      << "web_root = " << web_root << '\n'
      << "mode = " << mode << '\n'
      << "gather_ms = " << gather_ms << '\n';
  return out.str();
}

TickConfig Config::tick() const {
  TickConfig t;
  t.interval = ms_to_us(tick_ms);
  return t;
}

hierarchy::LevelPolicy Config::policy() const {
  hierarchy::LevelPolicy p;
  p.tau_fast = ms_to_us(tau_fast_ms);
  p.tau_idle = ms_to_us(tau_idle_ms);
  return p;
}

heat::SolverConfig Config::solver() const {
  heat::SolverConfig s;
  s.max_iter = max_iter;
  s.tolerance = tolerance;
  return s;
}

heat::Scenario Config::load_scenario() const {
  if (scenario.empty()) return heat::reference_scenario();
  try {
    return heat::load_scenario(scenario);
  } catch (const ParseError& e) {
    throw ConfigError("scenario `" + scenario + "`: " + e.what());
  }
}

Config parse_config(std::string_view text) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected `key = value`");
    }
    try {
      c.set(trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file `" + path + "`");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace steer::app
