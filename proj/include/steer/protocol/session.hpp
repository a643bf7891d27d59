#pragma once

#include <chrono>
#include <cstdint>

#include "steer/protocol/channel.hpp"

namespace steer::protocol {

struct Session {
  std::uint64_t session_id = 0;
  std::uint16_t negotiated_version = kVersion;
  ClientKind client_kind = ClientKind::Headless;
  std::chrono::steady_clock::time_point last_seen{};
  std::uint32_t received = 0;  // messages seen, Hello included
};

/// Server side. The first message must be Hello; a client below
/// `min_version` gets Bye. Both failures throw ProtocolError.
Session accept_session(Channel& ch, std::uint64_t session_id, std::uint16_t server_version = kVersion,
                       std::uint16_t min_version = kMinVersion);

/// Client side: sends Hello and waits for the Ack. Throws ProtocolError if
/// the server answers Bye or anything else. Messages other than Ack are
/// not expected before the Ack.
Session open_session(Channel& ch, ClientKind kind, std::uint16_t version = kVersion);

}  // namespace steer::protocol
