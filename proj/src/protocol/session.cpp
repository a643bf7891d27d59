#include "steer/protocol/session.hpp"

#include "steer/error.hpp"

namespace steer::protocol {

Session accept_session(Channel& ch, std::uint64_t session_id, std::uint16_t server_version,
                       std::uint16_t min_version) {
  auto first = ch.recv();
  if (!first) throw ProtocolError("connection closed before Hello");
  const auto* hello = std::get_if<Hello>(&*first);
  if (!hello) {
    throw ProtocolError("expected Hello, got " + std::string(type_name(type_of(*first))));
  }
  if (hello->protocol_version < min_version) {
    ch.send(Bye{});
    ch.flush();
    throw ProtocolError("client protocol version " + std::to_string(hello->protocol_version) +
                        " below minimum " + std::to_string(min_version));
  }
  Session s;
  s.session_id = session_id;
  s.negotiated_version = server_version;
  s.client_kind = hello->client_kind;
  s.last_seen = std::chrono::steady_clock::now();
  s.received = 1;
  ch.send(Ack{1});
  return s;
}

Session open_session(Channel& ch, ClientKind kind, std::uint16_t version) {
  ch.send(Hello{version, kind});
  auto reply = ch.recv();
  if (!reply) throw ProtocolError("server closed the connection during the handshake");
  if (std::holds_alternative<Bye>(*reply)) throw ProtocolError("server refused the session");
  const auto* ack = std::get_if<Ack>(&*reply);
  if (!ack || ack->ref_msg != 1) {
    throw ProtocolError("expected Ack of Hello, got " + std::string(type_name(type_of(*reply))));
  }
  Session s;
  s.negotiated_version = version;
  s.client_kind = kind;
  s.last_seen = std::chrono::steady_clock::now();
  return s;
}

}  // namespace steer::protocol
