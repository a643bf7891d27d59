#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "steer/heat/grid.hpp"

namespace steer::heat {

enum class EntityClass : std::uint8_t { HeatSource = 0, BoundaryPoint = 1 };

/// A point Dirichlet constraint in unit-square coordinates.
struct PointConstraint {
  std::uint32_t id = 0;
  double x = 0.0;
  double y = 0.0;
  double temperature = 0.0;
  friend bool operator==(const PointConstraint&, const PointConstraint&) = default;
};

enum class EditOp : std::uint8_t { Add = 0, Move = 1, Delete = 2 };

struct GeometryEdit {
  EditOp op = EditOp::Add;
  EntityClass entity = EntityClass::HeatSource;
  std::uint32_t id = 0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> temperature;  // required for Add; optional retarget on Move
};

struct Scenario {
  std::vector<PointConstraint> sources;
  std::vector<PointConstraint> boundary_points;
  double border_temperature = 0.0;

  const std::vector<PointConstraint>& entities(EntityClass c) const {
    return c == EntityClass::HeatSource ? sources : boundary_points;
  }
  std::vector<PointConstraint>& entities(EntityClass c) {
    return c == EntityClass::HeatSource ? sources : boundary_points;
  }

  /// Throws ParseError describing the first violated invariant.
  void validate() const;

  /// Applies an add/move/delete. Throws ParseError when the edit references
  /// a missing id, duplicates an id, or leaves the unit square.
  void apply(const GeometryEdit& edit);

  std::uint32_t next_free_id(EntityClass c) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses `source <id> <x> <y> <T>`, `boundary <id> <x> <y> <T>` and
/// `border <T>` lines; `#` starts a comment. Errors name the line number.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string format_scenario(const Scenario& s);

/// Nearest cell index for a unit coordinate on an n-cell axis: cell k sits
/// at k/n, so a 2:1 refinement maps cell k onto fine cell 2k.
std::size_t nearest_cell(double unit, std::size_t n);

/// Builds the level grid: border fixed at border_temperature, then sources,
/// then boundary points pinned at their nearest cells. Free cells start at 0.
/// A later entity landing on an occupied cell wins; a warning is recorded.
Grid rasterize(const Scenario& s, std::size_t width, std::size_t height,
               std::vector<std::string>* warnings = nullptr);

/// The demonstrator's default scene.
Scenario reference_scenario();

}  // namespace steer::heat
