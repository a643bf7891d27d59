#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steer/core/left_right.hpp"
#include "steer/core/value.hpp"

namespace steer {

struct VarState {
  std::string name;
  VarKind kind = VarKind::Int;
  Value value;
  std::uint64_t epoch = 0;  // bumps on every update of this variable
};

class VarHandle {
 public:
  VarHandle() = default;
  std::size_t index() const noexcept { return index_; }
  friend bool operator==(const VarHandle&, const VarHandle&) = default;

 private:
  friend class Registry;
  explicit VarHandle(std::size_t i) : index_(i) {}
  std::size_t index_ = static_cast<std::size_t>(-1);
};

/// Every variable as of one global epoch.
struct Snapshot {
  std::uint64_t epoch = 0;
  std::vector<VarState> vars;

  const VarState& state(VarHandle h) const { return vars.at(h.index()); }
  const Value& get(VarHandle h) const { return state(h).value; }
  template <class T>
  const T& as(VarHandle h) const {
    return std::get<T>(get(h));
  }
  const VarState* find(std::string_view name) const;
};

using Assignment = std::pair<std::string, Value>;

/// Named steerable variables. Reads are wait-free and always see one whole
/// epoch; writes are serialized and all-or-nothing.
class Registry {
 public:
  /// Throws RegistrationError for a duplicate name or a sealed registry and
  /// KindError when `initial` does not hold `kind`.
  VarHandle register_steerable(std::string name, VarKind kind, Value initial);

  /// After sealing no more variables may be registered.
  void seal();
  bool sealed() const;

  std::optional<VarHandle> find(std::string_view name) const;
  Snapshot snapshot() const;
  Value read(VarHandle h) const;
  std::uint64_t epoch() const;

  /// Throws BatchError (leaving everything unchanged) for an unknown name or
  /// a kind mismatch.
  void check(const std::vector<Assignment>& updates) const;
  /// Applies every assignment under one new global epoch and returns it. An
  /// empty batch changes nothing and returns the current epoch.
  std::uint64_t apply(const std::vector<Assignment>& updates);

 private:
  mutable std::mutex meta_;  // guards registration and sealing
  bool sealed_ = false;
  std::vector<std::pair<std::string, VarKind>> names_;
  LeftRight<Snapshot> data_;
};

}  // namespace steer
