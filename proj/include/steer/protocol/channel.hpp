#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "steer/protocol/codec.hpp"
#include "steer/protocol/transport.hpp"

namespace steer::protocol {

/// Message-level wrapper around a Stream. send() only queues; a writer
/// thread drains the queue, so senders never block on a slow peer.
/// recv() is meant for a single reader thread.
class Channel {
 public:
  explicit Channel(std::unique_ptr<Stream> stream);
  ~Channel();
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  /// Throws EncodeError for an invalid message; returns false once closed.
  bool send(const Message& m);
  /// Blocks for the next message; nullopt at end of stream or after
  /// close(). Throws ProtocolError on a corrupt stream.
  std::optional<Message> recv();

  /// Waits until everything queued so far has been written.
  void flush();
  void close();
  bool closed() const noexcept { return closed_.load(); }
  std::uint64_t sent() const noexcept { return sent_.load(); }
  std::string peer() const { return stream_->peer(); }

 private:
  void writer_loop();

  std::unique_ptr<Stream> stream_;
  FrameReader reader_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> queue_;
  bool writing_ = false;
  std::atomic<bool> closed_{false};
  std::atomic<std::uint64_t> sent_{0};
  std::thread writer_;
};

}  // namespace steer::protocol
