#include "steer/protocol/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steer/error.hpp"

namespace steer::protocol {
namespace {

constexpr std::size_t kMaxHead = 16 * 1024;
constexpr std::size_t kMaxMessage = std::size_t{1} << 28;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

void write_text(Stream& s, const std::string& text) {
  s.write_all(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                            text.size()));
}

std::string base64(const unsigned char* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data,
                                  static_cast<int>(n));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

/// Reads the head of an HTTP message (request or response).
std::string read_head(Stream& s, std::string head) {
  std::array<std::uint8_t, 1> one;
  while (head.find("\r\n\r\n") == std::string::npos) {
    if (head.size() > kMaxHead) throw ProtocolError("HTTP head too large");
    // Byte at a time so nothing past the head is consumed.
    if (s.read_some(one) == 0) throw ProtocolError("connection closed inside HTTP head");
    head.push_back(static_cast<char>(one[0]));
  }
  return head;
}

std::map<std::string, std::string> parse_headers(std::istringstream& in) {
  std::map<std::string, std::string> headers;
  std::string line;
  while (std::getline(in, line) && line != "\r" && !line.empty()) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ProtocolError("malformed HTTP header line");
    headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }
  return headers;
}

const char* content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

constexpr std::string_view kBuiltinPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>steer</title></head>"
    "<body><p>steer server. Connect a console to the WebSocket endpoint at /steer.</p>"
    "</body></html>\n";

void respond(Stream& s, int code, const char* reason, const char* type, std::string_view body,
             bool head_only) {
  std::ostringstream out;
  out << "HTTP/1.1 " << code << ' ' << reason << "\r\nContent-Type: " << type
      << "\r\nContent-Length: " << body.size() << "\r\nConnection: close\r\n\r\n";
  if (!head_only) out << body;
  write_text(s, out.str());
}

}  // namespace

std::string HttpRequest::header(const std::string& name) const {
  auto it = headers.find(lower(name));
  return it == headers.end() ? std::string{} : it->second;
}

bool HttpRequest::is_websocket_upgrade() const {
  return method == "GET" && lower(header("upgrade")) == "websocket" &&
         lower(header("connection")).find("upgrade") != std::string::npos &&
         !header("sec-websocket-key").empty();
}

HttpRequest read_http_request(Stream& s, std::string prefix) {
  std::istringstream in(read_head(s, std::move(prefix)));
  HttpRequest req;
  std::string line;
  std::getline(in, line);
  std::istringstream rl(line);
  std::string version;
  if (!(rl >> req.method >> req.target >> version) || version.rfind("HTTP/1.", 0) != 0) {
    throw ProtocolError("malformed HTTP request line");
  }
  req.headers = parse_headers(in);
  return req;
}

std::string websocket_accept_key(std::string_view client_key) {
  const std::string joined = std::string(client_key) + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  return base64(digest, sizeof(digest));
}

WebSocketStream::WebSocketStream(std::unique_ptr<Stream> inner, bool server)
    : inner_(std::move(inner)), server_(server) {}

void WebSocketStream::read_exact(std::uint8_t* out, std::size_t n) {
  while (n > 0) {
    if (raw_pos_ == raw_.size()) {
      raw_.resize(64 * 1024);
      const std::size_t got = inner_->read_some(raw_);
      raw_.resize(got);
      raw_pos_ = 0;
      if (got == 0) throw ProtocolError("connection closed inside a WebSocket frame");
    }
    const std::size_t take = std::min(n, raw_.size() - raw_pos_);
    std::copy_n(raw_.begin() + static_cast<std::ptrdiff_t>(raw_pos_), take, out);
    raw_pos_ += take;
    out += take;
    n -= take;
  }
}

std::size_t WebSocketStream::read_some(std::span<std::uint8_t> buf) {
  while (pending_pos_ == pending_.size()) {
    if (ended_) return 0;
    pending_.clear();
    pending_pos_ = 0;
    std::uint8_t h[2];
    try {
      // A clean close between frames is end of stream.
      if (raw_pos_ == raw_.size()) {
        raw_.resize(64 * 1024);
        const std::size_t got = inner_->read_some(raw_);
        raw_.resize(got);
        raw_pos_ = 0;
        if (got == 0) {
          ended_ = true;
          return 0;
        }
      }
      read_exact(h, 2);
    } catch (const TransportError&) {
      ended_ = true;
      return 0;
    }
    const std::uint8_t opcode = h[0] & 0x0F;
    const bool masked = (h[1] & 0x80) != 0;
    if (masked != server_) throw ProtocolError("WebSocket masking rule violated");
    std::uint64_t len = h[1] & 0x7F;
    if (len == 126) {
      std::uint8_t e[2];
      read_exact(e, 2);
      len = (std::uint64_t{e[0]} << 8) | e[1];
    } else if (len == 127) {
      std::uint8_t e[8];
      read_exact(e, 8);
      len = 0;
      for (auto b : e) len = (len << 8) | b;
    }
    if (len > kMaxMessage) throw ProtocolError("WebSocket frame too large");
    std::uint8_t key[4] = {0, 0, 0, 0};
    if (masked) read_exact(key, 4);
    std::vector<std::uint8_t> payload(len);
    read_exact(payload.data(), payload.size());
    if (masked) {
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= key[i % 4];
    }
    switch (opcode) {
      case 0x0:  // continuation
      case 0x2:  // binary
        pending_ = std::move(payload);
        break;
      case 0x1:
        throw ProtocolError("text WebSocket messages are not part of the protocol");
      case 0x8:
        ended_ = true;
        try {
          send_frame(0x8, {});
        } catch (const TransportError&) {
        }
        return 0;
      case 0x9:
        send_frame(0xA, payload);
        break;
      case 0xA:
        break;
      default:
        throw ProtocolError("unknown WebSocket opcode");
    }
  }
  const std::size_t n = std::min(buf.size(), pending_.size() - pending_pos_);
  std::copy_n(pending_.begin() + static_cast<std::ptrdiff_t>(pending_pos_), n, buf.begin());
  pending_pos_ += n;
  return n;
}

void WebSocketStream::send_frame(std::uint8_t opcode, std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> frame;
  frame.reserve(payload.size() + 14);
  frame.push_back(static_cast<std::uint8_t>(0x80 | opcode));
  const std::uint8_t mask_bit = server_ ? 0 : 0x80;
  if (payload.size() < 126) {
    frame.push_back(static_cast<std::uint8_t>(mask_bit | payload.size()));
  } else if (payload.size() <= 0xFFFF) {
    frame.push_back(mask_bit | 126);
    frame.push_back(static_cast<std::uint8_t>(payload.size() >> 8));
    frame.push_back(static_cast<std::uint8_t>(payload.size()));
  } else {
    frame.push_back(mask_bit | 127);
    for (int i = 7; i >= 0; --i) frame.push_back(static_cast<std::uint8_t>(payload.size() >> (8 * i)));
  }
  std::uint8_t key[4] = {0, 0, 0, 0};
  if (!server_) {
    RAND_bytes(key, 4);
    frame.insert(frame.end(), key, key + 4);
  }
  const std::size_t start = frame.size();
  frame.insert(frame.end(), payload.begin(), payload.end());
  if (!server_) {
    for (std::size_t i = start; i < frame.size(); ++i) frame[i] ^= key[(i - start) % 4];
  }
  std::lock_guard lock(write_mu_);
  inner_->write_all(frame);
}

void WebSocketStream::write_all(std::span<const std::uint8_t> data) { send_frame(0x2, data); }

void WebSocketStream::close() {
  try {
    send_frame(0x8, {});
  } catch (const Error&) {
  }
  inner_->close();
}

std::unique_ptr<Stream> accept_websocket(std::unique_ptr<Stream> s, const HttpRequest& req) {
  if (!req.is_websocket_upgrade()) throw ProtocolError("not a WebSocket upgrade request");
  std::ostringstream out;
  out << "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
      << "Sec-WebSocket-Accept: " << websocket_accept_key(req.header("sec-websocket-key"))
      << "\r\n\r\n";
  write_text(*s, out.str());
  return std::make_unique<WebSocketStream>(std::move(s), true);
}

std::unique_ptr<Stream> connect_websocket(std::unique_ptr<Stream> s, const std::string& host,
                                          std::string_view path) {
  unsigned char nonce[16];
  RAND_bytes(nonce, sizeof(nonce));
  const std::string key = base64(nonce, sizeof(nonce));
  std::ostringstream req;
  req << "GET " << path << " HTTP/1.1\r\nHost: " << host
      << "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " << key
      << "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  write_text(*s, req.str());
  std::istringstream in(read_head(*s, {}));
  std::string status_line;
  std::getline(in, status_line);
  if (status_line.find(" 101") == std::string::npos) {
    throw ProtocolError("WebSocket upgrade refused: " + trim(status_line));
  }
  const auto headers = parse_headers(in);
  auto it = headers.find("sec-websocket-accept");
  if (it == headers.end() || it->second != websocket_accept_key(key)) {
    throw ProtocolError("WebSocket accept key mismatch");
  }
  return std::make_unique<WebSocketStream>(std::move(s), false);
}

void serve_static(Stream& s, const HttpRequest& req, const std::string& web_root) {
  const bool head_only = req.method == "HEAD";
  if (req.method != "GET" && !head_only) {
    respond(s, 405, "Method Not Allowed", "text/plain", "method not allowed\n", false);
    return;
  }
  std::string path = req.target.substr(0, req.target.find_first_of("?#"));
  if (path.empty() || path[0] != '/') {
    respond(s, 400, "Bad Request", "text/plain", "bad request\n", head_only);
    return;
  }
  if (path.back() == '/') path += "index.html";
  if (web_root.empty()) {
    if (path == "/index.html") {
      respond(s, 200, "OK", "text/html; charset=utf-8", kBuiltinPage, head_only);
    } else {
      respond(s, 404, "Not Found", "text/plain", "not found\n", head_only);
    }
    return;
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path root = fs::weakly_canonical(web_root, ec);
  const fs::path file = fs::weakly_canonical(root / path.substr(1), ec);
  const auto rel = file.lexically_relative(root);
  if (ec || rel.empty() || *rel.begin() == "..") {
    respond(s, 403, "Forbidden", "text/plain", "forbidden\n", head_only);
    return;
  }
  std::ifstream f(file, std::ios::binary);
  if (!f || fs::is_directory(file)) {
    respond(s, 404, "Not Found", "text/plain", "not found\n", head_only);
    return;
  }
  std::ostringstream body;
  body << f.rdbuf();
  respond(s, 200, "OK", content_type(file), body.str(), head_only);
}

}  // namespace steer::protocol
