#include "steer/protocol/transport.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include "steer/error.hpp"

namespace steer::protocol {
namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_un unix_addr(const std::string& path) {
  sockaddr_un sa{};
  sa.sun_family = AF_UNIX;
  if (path.size() >= sizeof(sa.sun_path)) throw TransportError("unix socket path too long: " + path);
  std::memcpy(sa.sun_path, path.c_str(), path.size() + 1);
  return sa;
}

/// One direction of a memory pair.
struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> data;
  bool closed = false;
};

class MemoryStream : public Stream {
 public:
  MemoryStream(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryStream() override { close(); }

  std::size_t read_some(std::span<std::uint8_t> buf) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->data.empty() || in_->closed; });
    const std::size_t n = std::min(buf.size(), in_->data.size());
    std::copy_n(in_->data.begin(), n, buf.begin());
    in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }
  void write_all(std::span<const std::uint8_t> data) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw TransportError("memory stream closed");
    out_->data.insert(out_->data.end(), data.begin(), data.end());
    out_->cv.notify_all();
  }
  void close() override {
    for (auto* p : {in_.get(), out_.get()}) {
      std::lock_guard lock(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }
  std::string peer() const override { return "memory"; }

 private:
  std::shared_ptr<Pipe> in_, out_;
};

}  // namespace

FdStream::FdStream(int fd, std::string peer) : fd_(fd), peer_(std::move(peer)) {}

FdStream::~FdStream() {
  close();
  ::close(fd_);
}

std::size_t FdStream::read_some(std::span<std::uint8_t> buf) {
  for (;;) {
    const ssize_t n = ::read(fd_, buf.data(), buf.size());
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return 0;
    throw TransportError(errno_text("read"));
  }
}

void FdStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ENOTSOCK) {
        const ssize_t m = ::write(fd_, data.data() + done, data.size() - done);
        if (m < 0 && errno == EINTR) continue;
        if (m < 0) throw TransportError(errno_text("write"));
        done += static_cast<std::size_t>(m);
        continue;
      }
      throw TransportError(errno_text("send"));
    }
    done += static_cast<std::size_t>(n);
  }
}

void FdStream::close() {
  std::lock_guard lock(close_mu_);
  if (closed_) return;
  closed_ = true;
  ::shutdown(fd_, SHUT_RDWR);
}

PrefixedStream::PrefixedStream(std::vector<std::uint8_t> prefix, std::unique_ptr<Stream> inner)
    : prefix_(std::move(prefix)), inner_(std::move(inner)) {}

std::size_t PrefixedStream::read_some(std::span<std::uint8_t> buf) {
  if (pos_ < prefix_.size()) {
    const std::size_t n = std::min(buf.size(), prefix_.size() - pos_);
    std::memcpy(buf.data(), prefix_.data() + pos_, n);
    pos_ += n;
    return n;
  }
  return inner_->read_some(buf);
}

std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>> memory_pair() {
  auto a = std::make_shared<Pipe>(), b = std::make_shared<Pipe>();
  return {std::make_unique<MemoryStream>(a, b), std::make_unique<MemoryStream>(b, a)};
}

Address Address::parse(const std::string& text) {
  Address a;
  if (text.rfind("unix:", 0) == 0) {
    a.kind = Kind::Unix;
    a.path = text.substr(5);
    if (a.path.empty()) throw ConfigError("empty unix socket path");
    return a;
  }
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address `" + text + "` needs host:port");
  a.host = text.substr(0, colon);
  if (a.host.empty()) a.host = "127.0.0.1";
  try {
    std::size_t used = 0;
    const unsigned long port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port > 65535) throw ConfigError("");
    a.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("bad port in address `" + text + "`");
  }
  return a;
}

std::string Address::to_string() const {
  return kind == Kind::Unix ? "unix:" + path : host + ":" + std::to_string(port);
}

std::unique_ptr<FdStream> connect(const Address& addr) {
  if (addr.kind == Address::Kind::Unix) {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw TransportError(errno_text("socket"));
    const auto sa = unix_addr(addr.path);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) {
      const std::string err = errno_text(("connect " + addr.path).c_str());
      ::close(fd);
      throw TransportError(err);
    }
    return std::make_unique<FdStream>(fd, addr.to_string());
  }
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(addr.host.c_str(), std::to_string(addr.port).c_str(), &hints, &res) != 0) {
    throw TransportError("cannot resolve " + addr.host);
  }
  std::string last = "no addresses";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<FdStream>(fd, addr.to_string());
    }
    last = errno_text("connect");
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw TransportError(addr.to_string() + ": " + last);
}

std::unique_ptr<Listener> Listener::open(const Address& addr) {
  if (addr.kind == Address::Kind::Unix) {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw TransportError(errno_text("socket"));
    ::unlink(addr.path.c_str());
    const auto sa = unix_addr(addr.path);
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0 || ::listen(fd, 64) != 0) {
      const std::string err = errno_text(("listen " + addr.path).c_str());
      ::close(fd);
      throw TransportError(err);
    }
    return std::unique_ptr<Listener>(new Listener(fd, addr));
  }
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(addr.port);
  const std::string host = addr.host == "localhost" ? "127.0.0.1" : addr.host;
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
    ::close(fd);
    throw TransportError("listen address must be an IPv4 literal: " + addr.host);
  }
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0 || ::listen(fd, 64) != 0) {
    const std::string err = errno_text(("listen " + addr.to_string()).c_str());
    ::close(fd);
    throw TransportError(err);
  }
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  Address bound = addr;
  bound.port = ntohs(sa.sin_port);
  return std::unique_ptr<Listener>(new Listener(fd, bound));
}

Listener::~Listener() {
  close();
  ::close(fd_);
  if (addr_.kind == Address::Kind::Unix) ::unlink(addr_.path.c_str());
}

std::unique_ptr<FdStream> Listener::accept() {
  for (;;) {
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      if (addr_.kind == Address::Kind::Tcp) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      }
      return std::make_unique<FdStream>(fd, addr_.to_string());
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    {
      std::lock_guard lock(mu_);
      if (closed_) return nullptr;
    }
    if (errno == EMFILE || errno == ENFILE) continue;
    throw TransportError(errno_text("accept"));
  }
}

void Listener::close() {
  std::lock_guard lock(mu_);
  if (closed_) return;
  closed_ = true;
  ::shutdown(fd_, SHUT_RDWR);
}

}  // namespace steer::protocol
