#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace steer {

enum class VarKind : std::uint8_t { Int = 0, Float = 1, Bool = 2, Point2d = 3, Blob = 4 };

struct Point2d {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2d&, const Point2d&) = default;
};

using Blob = std::vector<std::uint8_t>;
using Value = std::variant<std::int64_t, double, bool, Point2d, Blob>;

VarKind kind_of(const Value& v) noexcept;
std::string_view kind_name(VarKind k) noexcept;
/// "int", "float", "bool", "point2d", "blob". Throws KindError otherwise.
VarKind parse_kind(std::string_view name);
/// Wire code -> kind. Throws KindError for codes past Blob.
VarKind kind_from_code(std::uint8_t code);

/// Text form used by configs and scripts: `42`, `0.5`, `true`, `0.3,0.4`,
/// blobs as the raw text.
std::string format_value(const Value& v);
/// Throws ParseError when `text` does not parse as `kind`.
Value parse_value(VarKind kind, std::string_view text);

Blob to_blob(std::string_view text);
std::string blob_text(const Blob& b);

}  // namespace steer
