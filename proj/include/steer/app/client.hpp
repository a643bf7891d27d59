#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "steer/app/script.hpp"
#include "steer/protocol/channel.hpp"
#include "steer/protocol/transport.hpp"

namespace steer::app {

struct TranscriptEntry {
  double t_ms = 0.0;  // since the client started
  bool sent = false;
  protocol::MsgType type = protocol::MsgType::Hello;
  std::optional<std::uint64_t> epoch;
  std::optional<std::uint32_t> level;
  std::optional<std::uint64_t> iteration;
  std::optional<double> residual;
  std::string detail;
};

std::string format_entry(const TranscriptEntry& e);
std::string format_transcript(const std::vector<TranscriptEntry>& t);

/// Level indices in the order the server announced them, starting with the
/// level in force when the session opened.
std::vector<std::uint32_t> level_sequence(const std::vector<TranscriptEntry>& t);

/// `true`/`false` -> bool, `x,y` -> point, integer literal -> int,
/// anything else -> float. Throws ParseError.
Value infer_value(const std::string& text);

/// Headless steering client: one session, a reader thread that tracks what
/// the server announced, and a transcript of everything sent and received.
class SteeringClient {
 public:
  /// Connects and completes the handshake. `websocket` tunnels the same
  /// frames through the /steer upgrade.
  SteeringClient(const protocol::Address& addr, bool websocket = false);
  ~SteeringClient();
  SteeringClient(const SteeringClient&) = delete;
  SteeringClient& operator=(const SteeringClient&) = delete;

  void send(const protocol::Message& m);
  void bye();

  std::vector<TranscriptEntry> transcript() const;
  std::optional<std::uint32_t> level() const;
  std::uint64_t max_epoch() const;
  std::optional<protocol::ResultFrame> last_frame() const;
  double tolerance() const;
  std::uint32_t acks() const;
  bool connected() const;

  /// Waits for a frame whose epoch is at least `epoch`.
  bool wait_epoch(std::uint64_t epoch, std::chrono::steady_clock::time_point deadline);
  /// Waits for `count` acks in total.
  bool wait_acks(std::uint32_t count, std::chrono::steady_clock::time_point deadline);

  /// A frame at or below the server's tolerance from an epoch newer than
  /// `after_epoch` (any epoch when empty).
  bool await_converged(std::optional<std::uint64_t> after_epoch, std::chrono::milliseconds timeout);
  /// Waits for the announced level to equal `level`; checks once if the
  /// deadline has passed.
  bool wait_level(std::uint32_t level, std::chrono::steady_clock::time_point deadline);

 private:
  void reader_loop();
  void record(bool sent, const protocol::Message& m);

  std::chrono::steady_clock::time_point t0_;
  std::unique_ptr<protocol::Channel> channel_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<TranscriptEntry> transcript_;
  std::optional<std::uint32_t> level_;
  std::uint64_t max_epoch_ = 0;
  std::optional<protocol::ResultFrame> last_frame_;
  std::uint64_t converged_epoch_ = 0;
  bool any_converged_ = false;
  double tolerance_ = 1e-3;
  std::uint32_t acks_ = 0;
  bool connected_ = true;
  std::thread reader_;
};

struct ScriptOptions {
  bool websocket = false;
  std::chrono::milliseconds linger{1000};  // keep listening after the last action
};

struct ScriptOutcome {
  bool ok = true;
  std::string failure;  // first failed action, with its line
  std::vector<TranscriptEntry> transcript;
};

/// Dispatches each action at its time (relative to the start) and records
/// the transcript. Connection problems throw TransportError/ProtocolError.
ScriptOutcome run_script(const Script& script, const protocol::Address& server,
                         const ScriptOptions& opts = {});

}  // namespace steer::app
