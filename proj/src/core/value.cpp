#include "steer/core/value.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "steer/error.hpp"

namespace steer {
namespace {

double parse_double(std::string_view s) {
  // from_chars for double is available in GCC 11.
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw ParseError("not a number: `" + std::string(s) + "`");
  return v;
}

}  // namespace

VarKind kind_of(const Value& v) noexcept { return static_cast<VarKind>(v.index()); }

std::string_view kind_name(VarKind k) noexcept {
  switch (k) {
    case VarKind::Int: return "int";
    case VarKind::Float: return "float";
    case VarKind::Bool: return "bool";
    case VarKind::Point2d: return "point2d";
    case VarKind::Blob: return "blob";
  }
  return "?";
}

VarKind parse_kind(std::string_view name) {
  for (std::uint8_t c = 0; c <= static_cast<std::uint8_t>(VarKind::Blob); ++c) {
    if (kind_name(static_cast<VarKind>(c)) == name) return static_cast<VarKind>(c);
  }
  throw KindError("unknown variable kind `" + std::string(name) + "`");
}

VarKind kind_from_code(std::uint8_t code) {
  if (code > static_cast<std::uint8_t>(VarKind::Blob)) {
    throw KindError("unknown variable kind code " + std::to_string(code));
  }
  return static_cast<VarKind>(code);
}

std::string format_value(const Value& v) {
  std::ostringstream out;
  out.precision(17);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) out << (x ? "true" : "false");
        else if constexpr (std::is_same_v<T, Point2d>) out << x.x << ',' << x.y;
        else if constexpr (std::is_same_v<T, Blob>) out << blob_text(x);
        else out << x;
      },
      v);
  return out.str();
}

Value parse_value(VarKind kind, std::string_view text) {
  switch (kind) {
    case VarKind::Int: {
      std::int64_t v = 0;
      const auto* end = text.data() + text.size();
      auto [p, ec] = std::from_chars(text.data(), end, v);
      if (ec != std::errc{} || p != end || text.empty()) {
        throw ParseError("not an integer: `" + std::string(text) + "`");
      }
      return v;
    }
    case VarKind::Float: {
      const double v = parse_double(text);
      if (!std::isfinite(v)) throw ParseError("not a finite number: `" + std::string(text) + "`");
      return v;
    }
    case VarKind::Bool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ParseError("not a bool: `" + std::string(text) + "`");
    case VarKind::Point2d: {
      const auto comma = text.find(',');
      if (comma == std::string_view::npos) {
        throw ParseError("expected `x,y`, got `" + std::string(text) + "`");
      }
      return Point2d{parse_double(text.substr(0, comma)), parse_double(text.substr(comma + 1))};
    }
    case VarKind::Blob:
      return to_blob(text);
  }
  throw KindError("unknown variable kind");
}

Blob to_blob(std::string_view text) { return Blob(text.begin(), text.end()); }
std::string blob_text(const Blob& b) { return std::string(b.begin(), b.end()); }

}  // namespace steer
