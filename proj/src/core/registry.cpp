#include "steer/core/registry.hpp"

#include <algorithm>

#include "steer/error.hpp"

namespace steer {

const VarState* Snapshot::find(std::string_view name) const {
  for (const auto& v : vars) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

VarHandle Registry::register_steerable(std::string name, VarKind kind, Value initial) {
  if (static_cast<std::uint8_t>(kind) > static_cast<std::uint8_t>(VarKind::Blob)) {
    throw KindError("unknown variable kind for `" + name + "`");
  }
  if (kind_of(initial) != kind) {
    throw KindError("initial value of `" + name + "` is " +
                    std::string(kind_name(kind_of(initial))) + ", declared " +
                    std::string(kind_name(kind)));
  }
  std::lock_guard lock(meta_);
  if (sealed_) throw RegistrationError("registry is sealed; cannot register `" + name + "`");
  for (const auto& [n, k] : names_) {
    if (n == name) throw RegistrationError("variable `" + name + "` is already registered");
  }
  names_.emplace_back(name, kind);
  data_.modify([&](Snapshot& s) { s.vars.push_back({name, kind, initial, 0}); });
  return VarHandle(names_.size() - 1);
}

void Registry::seal() {
  std::lock_guard lock(meta_);
  sealed_ = true;
}

bool Registry::sealed() const {
  std::lock_guard lock(meta_);
  return sealed_;
}

std::optional<VarHandle> Registry::find(std::string_view name) const {
  std::lock_guard lock(meta_);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].first == name) return VarHandle(i);
  }
  return std::nullopt;
}

Snapshot Registry::snapshot() const {
  return data_.read([](const Snapshot& s) { return s; });
}

Value Registry::read(VarHandle h) const {
  return data_.read([&](const Snapshot& s) { return s.vars.at(h.index()).value; });
}

std::uint64_t Registry::epoch() const {
  return data_.read([](const Snapshot& s) { return s.epoch; });
}

void Registry::check(const std::vector<Assignment>& updates) const {
  std::lock_guard lock(meta_);
  for (const auto& [name, value] : updates) {
    const auto it = std::find_if(names_.begin(), names_.end(),
                                 [&](const auto& e) { return e.first == name; });
    if (it == names_.end()) throw BatchError("unknown variable `" + name + "`; batch rejected");
    if (it->second != kind_of(value)) {
      throw BatchError("`" + name + "` expects " + std::string(kind_name(it->second)) + ", got " +
                       std::string(kind_name(kind_of(value))) + "; batch rejected");
    }
  }
}

std::uint64_t Registry::apply(const std::vector<Assignment>& updates) {
  check(updates);
  if (updates.empty()) return epoch();
  std::vector<std::pair<std::size_t, const Value*>> resolved;
  {
    std::lock_guard lock(meta_);
    for (const auto& [name, value] : updates) {
      for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].first == name) resolved.emplace_back(i, &value);
      }
    }
  }
  std::uint64_t applied = 0;
  data_.modify([&](Snapshot& s) {
    ++s.epoch;
    for (const auto& [i, v] : resolved) {
      s.vars[i].value = *v;
      ++s.vars[i].epoch;
    }
    applied = s.epoch;
  });
  return applied;
}

}  // namespace steer
