#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steer/protocol/message.hpp"

namespace steer::protocol {

using Bytes = std::vector<std::uint8_t>;

/// Header + payload, little-endian. Throws EncodeError when a field breaks
/// a size limit or a structural invariant (e.g. field length != w*h).
Bytes encode(const Message& m);
void encode_into(const Message& m, Bytes& out);

struct DecodeResult {
  enum class Status { Ok, NeedMore, Corrupt };
  Status status = Status::NeedMore;
  std::optional<Message> message;
  std::size_t consumed = 0;  // 0 unless Ok
  std::string error;         // for Corrupt

  bool ok() const noexcept { return status == Status::Ok; }
};

/// Decodes the first frame of `bytes`. Never throws on any input.
DecodeResult decode(std::span<const std::uint8_t> bytes) noexcept;

/// Accumulates stream bytes and yields whole messages.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete message, nullopt when more bytes are needed. Throws
  /// ProtocolError once the stream is corrupt (and on every later call).
  std::optional<Message> next();
  std::size_t buffered() const noexcept { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
  std::optional<std::string> corrupt_;
};

}  // namespace steer::protocol
