#include "steer/heat/scenario.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "steer/error.hpp"

namespace steer::heat {
namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

const char* class_name(EntityClass c) {
  return c == EntityClass::HeatSource ? "source" : "boundary";
}

}  // namespace

void Scenario::validate() const {
  if (!std::isfinite(border_temperature)) throw ParseError("border temperature must be finite");
  for (auto c : {EntityClass::HeatSource, EntityClass::BoundaryPoint}) {
    std::set<std::uint32_t> ids;
    for (const auto& e : entities(c)) {
      if (!ids.insert(e.id).second) {
        throw ParseError(std::string("duplicate ") + class_name(c) + " id " + std::to_string(e.id));
      }
      if (!in_unit(e.x) || !in_unit(e.y)) {
        throw ParseError(std::string(class_name(c)) + " " + std::to_string(e.id) +
                         " lies outside the unit square");
      }
      if (!std::isfinite(e.temperature)) {
        throw ParseError(std::string(class_name(c)) + " " + std::to_string(e.id) +
                         " has a non-finite temperature");
      }
    }
  }
}

void Scenario::apply(const GeometryEdit& edit) {
  auto& list = entities(edit.entity);
  auto it = std::find_if(list.begin(), list.end(), [&](const auto& e) { return e.id == edit.id; });
  const std::string what = std::string(class_name(edit.entity)) + " " + std::to_string(edit.id);
  switch (edit.op) {
    case EditOp::Add:
      if (it != list.end()) throw ParseError(what + " already exists");
      if (!edit.temperature) throw ParseError("adding " + what + " requires a temperature");
      if (!in_unit(edit.x) || !in_unit(edit.y) || !std::isfinite(*edit.temperature)) {
        throw ParseError("invalid placement for " + what);
      }
      list.push_back({edit.id, edit.x, edit.y, *edit.temperature});
      break;
    case EditOp::Move:
      if (it == list.end()) throw ParseError(what + " does not exist");
      if (!in_unit(edit.x) || !in_unit(edit.y)) throw ParseError("invalid placement for " + what);
      if (edit.temperature && !std::isfinite(*edit.temperature)) {
        throw ParseError("invalid temperature for " + what);
      }
      it->x = edit.x;
      it->y = edit.y;
      if (edit.temperature) it->temperature = *edit.temperature;
      break;
    case EditOp::Delete:
      if (it == list.end()) throw ParseError(what + " does not exist");
      list.erase(it);
      break;
  }
}

std::uint32_t Scenario::next_free_id(EntityClass c) const {
  std::uint32_t next = 1;
  for (const auto& e : entities(c)) next = std::max(next, e.id + 1);
  return next;
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword)) continue;
    auto fail = [&](const std::string& why) -> ParseError {
      return ParseError("scenario line " + std::to_string(lineno) + ": " + why);
    };
    if (keyword == "border") {
      if (!(ls >> s.border_temperature)) throw fail("expected `border <T>`");
    } else if (keyword == "source" || keyword == "boundary") {
      PointConstraint p;
      long long id = -1;
      if (!(ls >> id >> p.x >> p.y >> p.temperature) || id < 0 || id > 0xFFFFFFFFLL) {
        throw fail("expected `" + keyword + " <id> <x> <y> <T>`");
      }
      p.id = static_cast<std::uint32_t>(id);
      (keyword == "source" ? s.sources : s.boundary_points).push_back(p);
    } else {
      throw fail("unknown keyword `" + keyword + "`");
    }
    std::string extra;
    if (ls >> extra) throw fail("trailing token `" + extra + "`");
  }
  try {
    s.validate();
  } catch (const ParseError& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream out;
  out.precision(17);
  out << "border " << s.border_temperature << '\n';
  for (const auto& e : s.sources) {
    out << "source " << e.id << ' ' << e.x << ' ' << e.y << ' ' << e.temperature << '\n';
  }
  for (const auto& e : s.boundary_points) {
    out << "boundary " << e.id << ' ' << e.x << ' ' << e.y << ' ' << e.temperature << '\n';
  }
  return out.str();
}

std::size_t nearest_cell(double unit, std::size_t n) {
  const double scaled = std::clamp(unit, 0.0, 1.0) * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::llround(scaled));
  return std::min(k, n - 1);
}

Grid rasterize(const Scenario& s, std::size_t width, std::size_t height,
               std::vector<std::string>* warnings) {
  Grid g(width, height, s.border_temperature);
  std::vector<std::uint8_t> claimed(width * height, 0);
  auto pin = [&](const PointConstraint& p, EntityClass c) {
    const std::size_t r = nearest_cell(p.y, height);
    const std::size_t col = nearest_cell(p.x, width);
    auto& slot = claimed[r * width + col];
    if (slot) {
      std::string msg = std::string(class_name(c)) + " " + std::to_string(p.id) +
                        " overrides an entity at cell (" + std::to_string(r) + "," +
                        std::to_string(col) + ") on the " + std::to_string(width) + "x" +
                        std::to_string(height) + " grid";
      spdlog::warn("{}", msg);
      if (warnings) warnings->push_back(std::move(msg));
    }
    slot = 1;
    g.fix(r, col, p.temperature);
  };
  for (const auto& p : s.sources) pin(p, EntityClass::HeatSource);
  for (const auto& p : s.boundary_points) pin(p, EntityClass::BoundaryPoint);
  return g;
}

Scenario reference_scenario() {
  Scenario s;
  s.border_temperature = 10.0;
  s.sources = {{1, 0.30, 0.35, 100.0}, {2, 0.70, 0.60, 80.0}, {3, 0.50, 0.80, 60.0}};
  s.boundary_points = {{1, 0.20, 0.75, 0.0}, {2, 0.80, 0.25, 0.0}};
  return s;
}

}  // namespace steer::heat
