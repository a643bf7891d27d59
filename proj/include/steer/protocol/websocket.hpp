#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "steer/protocol/transport.hpp"

namespace steer::protocol {

inline constexpr std::string_view kWebSocketPath = "/steer";

struct HttpRequest {
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;  // lower-case names

  std::string header(const std::string& name) const;
  bool is_websocket_upgrade() const;
};

/// Reads a request head (up to the blank line). `prefix` holds bytes
/// already taken from the stream. Throws ProtocolError on malformed or
/// oversized input.
HttpRequest read_http_request(Stream& s, std::string prefix = {});

/// Sec-WebSocket-Accept for a client key.
std::string websocket_accept_key(std::string_view client_key);

/// Binary WebSocket messages as a byte stream: each write_all() becomes one
/// binary message and reads return the payload bytes in order. Pings are
/// answered, a close frame ends the stream.
class WebSocketStream : public Stream {
 public:
  /// Server streams expect masked input and send unmasked frames.
  WebSocketStream(std::unique_ptr<Stream> inner, bool server);
  std::size_t read_some(std::span<std::uint8_t> buf) override;
  void write_all(std::span<const std::uint8_t> data) override;
  void close() override;
  std::string peer() const override { return inner_->peer(); }

 private:
  void send_frame(std::uint8_t opcode, std::span<const std::uint8_t> payload);
  void read_exact(std::uint8_t* out, std::size_t n);

  std::unique_ptr<Stream> inner_;
  bool server_;
  std::mutex write_mu_;
  std::vector<std::uint8_t> pending_;  // decoded payload not yet returned
  std::size_t pending_pos_ = 0;
  std::vector<std::uint8_t> raw_;      // undecoded bytes from inner_
  std::size_t raw_pos_ = 0;
  bool ended_ = false;
};

/// Completes the server side of the upgrade for `req` and wraps the stream.
std::unique_ptr<Stream> accept_websocket(std::unique_ptr<Stream> s, const HttpRequest& req);
/// Client side upgrade on a connected stream.
std::unique_ptr<Stream> connect_websocket(std::unique_ptr<Stream> s, const std::string& host,
                                          std::string_view path = kWebSocketPath);

/// Answers a GET for a file under `web_root` (index.html for "/"). Without
/// a web root a small built-in page is served for "/".
void serve_static(Stream& s, const HttpRequest& req, const std::string& web_root);

}  // namespace steer::protocol
