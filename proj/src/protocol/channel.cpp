#include "steer/protocol/channel.hpp"

#include <array>

#include "steer/error.hpp"

namespace steer::protocol {

Channel::Channel(std::unique_ptr<Stream> stream) : stream_(std::move(stream)) {
  writer_ = std::thread([this] { writer_loop(); });
}

Channel::~Channel() {
  close();
  if (writer_.joinable()) writer_.join();
}

bool Channel::send(const Message& m) {
  Bytes frame = encode(m);
  std::lock_guard lock(mu_);
  if (closed_) return false;
  queue_.push_back(std::move(frame));
  cv_.notify_all();
  return true;
}

std::optional<Message> Channel::recv() {
  std::array<std::uint8_t, 64 * 1024> buf;
  for (;;) {
    if (auto m = reader_.next()) return m;
    if (closed_) return std::nullopt;
    std::size_t n = 0;
    try {
      n = stream_->read_some(buf);
    } catch (const TransportError&) {
      n = 0;
    }
    if (n == 0) {
      if (reader_.buffered() > 0 && !closed_) {
        throw ProtocolError("stream ended inside a frame");
      }
      return std::nullopt;
    }
    reader_.feed(std::span<const std::uint8_t>(buf.data(), n));
  }
}

void Channel::flush() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return (queue_.empty() && !writing_) || closed_; });
}

void Channel::close() {
  {
    std::lock_guard lock(mu_);
    if (closed_.exchange(true)) return;
    cv_.notify_all();
  }
  stream_->close();
}

void Channel::writer_loop() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (closed_) {
      queue_.clear();
      cv_.notify_all();
      return;
    }
    Bytes frame = std::move(queue_.front());
    queue_.pop_front();
    writing_ = true;
    lock.unlock();
    bool ok = true;
    try {
      stream_->write_all(frame);
      ++sent_;
    } catch (const TransportError&) {
      ok = false;
    }
    lock.lock();
    writing_ = false;
    cv_.notify_all();
    if (!ok) {
      closed_ = true;
      queue_.clear();
      lock.unlock();
      stream_->close();
      lock.lock();
      cv_.notify_all();
      return;
    }
  }
}

}  // namespace steer::protocol
