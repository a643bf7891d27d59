#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace steer {

struct Event {
  enum class Type { EpochStart, EpochAbort, EpochComplete, WatchdogWarning };
  Type type = Type::EpochStart;
  std::uint64_t epoch = 0;
  std::int64_t latency_us = 0;   // EpochAbort
  std::uint64_t iterations = 0;  // EpochComplete
  std::string detail;            // WatchdogWarning

  /// One JSON object, e.g. {"event":"epoch_abort","epoch":3,"latency_us":812}.
  std::string to_json() const;
};

std::string_view event_name(Event::Type t) noexcept;

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(const Event& e) = 0;
};

/// JSON lines through spdlog; watchdog warnings at warn level.
class LogSink : public EventSink {
 public:
  void emit(const Event& e) override;
};

/// Keeps everything; for tests and the benchmark.
class RecordingSink : public EventSink {
 public:
  void emit(const Event& e) override;
  std::vector<Event> events() const;
  std::size_t count(Event::Type t) const;

 private:
  mutable std::mutex mu_;
  std::vector<Event> events_;
};

}  // namespace steer
