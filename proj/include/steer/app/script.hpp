#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace steer::app {

/// One timed line of a steering script:
///   at <t_ms> param <name> <value>
///   at <t_ms> add_source <x> <y> <T>       | add_boundary <x> <y> <T>
///   at <t_ms> move_source <id> <x> <y>     | move_boundary <id> <x> <y>
///   at <t_ms> delete_source <id>           | delete_boundary <id>
///   at <t_ms> expect_level <index> [<within_ms>]
///   at <t_ms> await_converged <timeout_ms>
/// Times are relative to the script start and must not decrease.
struct ScriptAction {
  enum class Kind {
    Param,
    AddSource,
    MoveSource,
    DeleteSource,
    AddBoundary,
    MoveBoundary,
    DeleteBoundary,
    ExpectLevel,
    AwaitConverged,
  };
  std::uint64_t at_ms = 0;
  Kind kind = Kind::Param;
  std::string name;   // param
  std::string value;  // param, as written
  std::uint32_t id = 0;
  double x = 0.0, y = 0.0, temperature = 0.0;
  std::uint32_t level = 0;
  std::uint64_t wait_ms = 0;  // expect_level grace / await_converged timeout
  std::size_t line = 0;
};

struct Script {
  std::vector<ScriptAction> actions;

  /// Throws ParseError naming the line.
  static Script parse(std::string_view text);
  static Script load(const std::string& path);
};

}  // namespace steer::app
