#include "steer/app/script.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "steer/error.hpp"

namespace steer::app {
namespace {

using K = ScriptAction::Kind;

const std::map<std::string, K, std::less<>>& verbs() {
  static const std::map<std::string, K, std::less<>> v{
      {"param", K::Param},
      {"add_source", K::AddSource},
      {"move_source", K::MoveSource},
      {"delete_source", K::DeleteSource},
      {"add_boundary", K::AddBoundary},
      {"move_boundary", K::MoveBoundary},
      {"delete_boundary", K::DeleteBoundary},
      {"expect_level", K::ExpectLevel},
      {"await_converged", K::AwaitConverged},
  };
  return v;
}

}  // namespace

Script Script::parse(std::string_view text) {
  Script out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t last = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string at;
    if (!(ls >> at)) continue;
    auto fail = [&](const std::string& why) {
      return ParseError("script line " + std::to_string(lineno) + ": " + why);
    };
    long long t = -1;
    std::string verb;
    if (at != "at" || !(ls >> t) || t < 0 || !(ls >> verb)) {
      throw fail("expected `at <t_ms> <action> ...`");
    }
    auto it = verbs().find(verb);
    if (it == verbs().end()) throw fail("unknown action `" + verb + "`");
    ScriptAction a;
    a.at_ms = static_cast<std::uint64_t>(t);
    a.kind = it->second;
    a.line = lineno;
    if (a.at_ms < last) throw fail("time goes backwards");
    last = a.at_ms;
    bool ok = true;
    long long n = 0;
    switch (a.kind) {
      case K::Param:
        ok = static_cast<bool>(ls >> a.name >> a.value);
        break;
      case K::AddSource:
      case K::AddBoundary:
        ok = static_cast<bool>(ls >> a.x >> a.y >> a.temperature);
        break;
      case K::MoveSource:
      case K::MoveBoundary:
        ok = static_cast<bool>(ls >> n >> a.x >> a.y) && n > 0;
        a.id = static_cast<std::uint32_t>(n);
        break;
      case K::DeleteSource:
      case K::DeleteBoundary:
        ok = static_cast<bool>(ls >> n) && n > 0;
        a.id = static_cast<std::uint32_t>(n);
        break;
      case K::ExpectLevel:
        ok = static_cast<bool>(ls >> n) && n >= 0;
        a.level = static_cast<std::uint32_t>(n);
        if (ok && (ls >> n)) {
          ok = n >= 0;
          a.wait_ms = static_cast<std::uint64_t>(n);
        }
        ls.clear();
        break;
      case K::AwaitConverged:
        ok = static_cast<bool>(ls >> n) && n > 0;
        a.wait_ms = static_cast<std::uint64_t>(n);
        break;
    }
    std::string extra;
    if (!ok) throw fail("bad arguments for `" + verb + "`");
    if (ls >> extra) throw fail("unexpected `" + extra + "`");
    out.actions.push_back(std::move(a));
  }
  return out;
}

Script Script::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot read script `" + path + "`");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

}  // namespace steer::app
