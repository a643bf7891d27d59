#include "steer/core/epoch.hpp"

#include <spdlog/spdlog.h>

#include "steer/error.hpp"

namespace steer {

EpochContext::HookId EpochContext::register_cleanup(std::function<void()> hook) {
  std::lock_guard lock(hooks_mu_);
  if (finished_) {
    throw LifecycleError("epoch " + std::to_string(epoch_) + " already ended; cleanup refused");
  }
  hooks_.push_back(std::move(hook));
  return hooks_.size() - 1;
}

void EpochContext::finish() {
  std::vector<std::function<void()>> hooks;
  {
    std::lock_guard lock(hooks_mu_);
    if (finished_) return;
    finished_ = true;
    hooks.swap(hooks_);
  }
  for (auto it = hooks.rbegin(); it != hooks.rend(); ++it) {
    try {
      (*it)();
    } catch (const std::exception& e) {
      spdlog::error("cleanup hook of epoch {} threw: {}", epoch_, e.what());
    }
  }
}

bool EpochContext::finished() const {
  std::lock_guard lock(hooks_mu_);
  return finished_;
}

}  // namespace steer
