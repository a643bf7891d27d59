#include "steer/protocol/message.hpp"

namespace steer::protocol {

MsgType type_of(const Message& m) noexcept {
  static constexpr MsgType kOrder[] = {
      MsgType::Hello,          MsgType::ParamUpdate,  MsgType::GeometryUpdate,
      MsgType::ResultFrame,    MsgType::LevelSwitch,  MsgType::Stats,
      MsgType::Ack,            MsgType::Bye,          MsgType::WorkerJoin,
      MsgType::TopologyAssign, MsgType::UpdateBroadcast, MsgType::EpochBegin,
      MsgType::SweepReport,    MsgType::SweepAck,     MsgType::BandData};
  static_assert(std::size(kOrder) == std::variant_size_v<Message>);
  return kOrder[m.index()];
}

std::string_view type_name(MsgType t) noexcept {
  switch (t) {
    case MsgType::Hello: return "Hello";
    case MsgType::ParamUpdate: return "ParamUpdate";
    case MsgType::GeometryUpdate: return "GeometryUpdate";
    case MsgType::ResultFrame: return "ResultFrame";
    case MsgType::LevelSwitch: return "LevelSwitch";
    case MsgType::Stats: return "Stats";
    case MsgType::Ack: return "Ack";
    case MsgType::Bye: return "Bye";
    case MsgType::WorkerJoin: return "WorkerJoin";
    case MsgType::TopologyAssign: return "TopologyAssign";
    case MsgType::UpdateBroadcast: return "UpdateBroadcast";
    case MsgType::EpochBegin: return "EpochBegin";
    case MsgType::SweepReport: return "SweepReport";
    case MsgType::SweepAck: return "SweepAck";
    case MsgType::BandData: return "BandData";
  }
  return "?";
}

}  // namespace steer::protocol
