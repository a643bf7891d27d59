#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace steer::protocol {

/// Blocking duplex byte stream.
class Stream {
 public:
  virtual ~Stream() = default;
  /// Waits for at least one byte; 0 means end of stream. Throws
  /// TransportError on failure.
  virtual std::size_t read_some(std::span<std::uint8_t> buf) = 0;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  /// Wakes blocked readers and writers; the stream is unusable afterwards.
  virtual void close() = 0;
  virtual std::string peer() const { return {}; }
};

/// Socket or pipe file descriptor; owns and closes it.
class FdStream : public Stream {
 public:
  explicit FdStream(int fd, std::string peer = {});
  ~FdStream() override;
  std::size_t read_some(std::span<std::uint8_t> buf) override;
  void write_all(std::span<const std::uint8_t> data) override;
  void close() override;
  std::string peer() const override { return peer_; }
  int fd() const noexcept { return fd_; }

 private:
  int fd_;
  std::string peer_;
  std::mutex close_mu_;
  bool closed_ = false;
};

/// Replays `prefix` before reading from the wrapped stream.
class PrefixedStream : public Stream {
 public:
  PrefixedStream(std::vector<std::uint8_t> prefix, std::unique_ptr<Stream> inner);
  std::size_t read_some(std::span<std::uint8_t> buf) override;
  void write_all(std::span<const std::uint8_t> data) override { inner_->write_all(data); }
  void close() override { inner_->close(); }
  std::string peer() const override { return inner_->peer(); }

 private:
  std::vector<std::uint8_t> prefix_;
  std::size_t pos_ = 0;
  std::unique_ptr<Stream> inner_;
};

/// Connected in-memory pair.
std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>> memory_pair();

/// `host:port` (TCP) or `unix:<path>`.
struct Address {
  enum class Kind { Tcp, Unix } kind = Kind::Tcp;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string path;

  /// Throws ConfigError on a malformed address.
  static Address parse(const std::string& text);
  std::string to_string() const;
};

std::unique_ptr<FdStream> connect(const Address& addr);

class Listener {
 public:
  /// Port 0 picks a free port. Throws TransportError when binding fails.
  static std::unique_ptr<Listener> open(const Address& addr);
  ~Listener();
  /// nullptr once the listener has been closed.
  std::unique_ptr<FdStream> accept();
  void close();
  /// Actual bound address (port filled in for TCP).
  const Address& address() const noexcept { return addr_; }

 private:
  Listener(int fd, Address addr) : fd_(fd), addr_(std::move(addr)) {}
  int fd_;
  Address addr_;
  std::mutex mu_;
  bool closed_ = false;
};

}  // namespace steer::protocol
