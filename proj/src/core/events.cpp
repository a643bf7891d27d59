#include "steer/core/events.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

#include "json.hpp"

namespace steer {

std::string_view event_name(Event::Type t) noexcept {
  switch (t) {
    case Event::Type::EpochStart: return "epoch_start";
    case Event::Type::EpochAbort: return "epoch_abort";
    case Event::Type::EpochComplete: return "epoch_complete";
    case Event::Type::WatchdogWarning: return "watchdog_warning";
  }
  return "?";
}

std::string Event::to_json() const {
  nlohmann::json j{{"event", event_name(type)}, {"epoch", epoch}};
  switch (type) {
    case Type::EpochAbort: j["latency_us"] = latency_us; break;
    case Type::EpochComplete: j["iterations"] = iterations; break;
    case Type::WatchdogWarning: j["detail"] = detail; break;
    case Type::EpochStart: break;
  }
  return j.dump();
}

void LogSink::emit(const Event& e) {
  if (e.type == Event::Type::WatchdogWarning) spdlog::warn("{}", e.to_json());
  else spdlog::info("{}", e.to_json());
}

void RecordingSink::emit(const Event& e) {
  std::lock_guard lock(mu_);
  events_.push_back(e);
}

std::vector<Event> RecordingSink::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t RecordingSink::count(Event::Type t) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [t](const Event& e) { return e.type == t; }));
}

}  // namespace steer
