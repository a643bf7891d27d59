#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "steer/core/registry.hpp"
#include "steer/core/value.hpp"
#include "steer/heat/scenario.hpp"

namespace steer::protocol {

inline constexpr std::array<std::uint8_t, 4> kMagic{'S', 'T', 'E', 'R'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint16_t kMinVersion = 1;
inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxPayload = std::size_t{1} << 28;
inline constexpr std::uint16_t kDefaultPort = 7420;

enum class MsgType : std::uint16_t {
  Hello = 1,
  ParamUpdate = 2,
  GeometryUpdate = 3,
  ResultFrame = 4,
  LevelSwitch = 5,
  Stats = 6,
  Ack = 7,
  Bye = 8,
  // Coordinator <-> worker traffic.
  WorkerJoin = 0x10,
  TopologyAssign = 0x11,
  UpdateBroadcast = 0x12,
  EpochBegin = 0x13,
  SweepReport = 0x14,
  SweepAck = 0x15,
  BandData = 0x16,
};

enum class ClientKind : std::uint8_t { Ui = 0, Headless = 1, Worker = 2 };

struct Hello {
  std::uint16_t protocol_version = kVersion;
  ClientKind client_kind = ClientKind::Headless;
  bool operator==(const Hello&) const = default;
};

struct ParamUpdate {
  std::string name;
  Value value;  // kind travels with it
  bool operator==(const ParamUpdate&) const = default;
};

struct GeometryUpdate {
  heat::EditOp op = heat::EditOp::Add;
  heat::EntityClass entity = heat::EntityClass::HeatSource;
  std::uint32_t id = 0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> temperature;
  bool operator==(const GeometryUpdate&) const = default;
};

struct ResultFrame {
  std::uint64_t epoch = 0;
  std::uint32_t level_index = 0;
  std::uint64_t iteration = 0;
  double residual = 0.0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> field;  // row-major, width * height
  bool operator==(const ResultFrame&) const = default;
};

struct LevelSwitch {
  std::uint32_t from_index = 0;
  std::uint32_t to_index = 0;
  std::string reason;
  bool operator==(const LevelSwitch&) const = default;
};

struct Stats {
  std::uint64_t epoch = 0;
  double overhead_pct = 0.0;
  std::uint64_t restart_latency_us = 0;
  std::uint64_t updates_coalesced = 0;
  std::vector<std::uint32_t> worker_sweep_us;  // mean per rank, last epoch
  bool operator==(const Stats&) const = default;
};

/// ref_msg is the sequence number (1-based) of the acknowledged message
/// within the session.
struct Ack {
  std::uint32_t ref_msg = 0;
  bool operator==(const Ack&) const = default;
};

struct Bye {
  bool operator==(const Bye&) const = default;
};

struct WorkerJoin {
  std::uint32_t rank = 0;
  std::uint32_t pid = 0;
  bool operator==(const WorkerJoin&) const = default;
};

struct TopologyAssign {
  std::uint32_t rank = 0;
  std::uint32_t worker_count = 1;
  std::uint32_t fanout = 4;
  std::uint32_t tick_us = 5000;
  std::string parent_addr;  // empty: the parent is the coordinator link
  std::string listen_addr;  // empty: no children
  bool operator==(const TopologyAssign&) const = default;
};

struct UpdateBroadcast {
  std::uint64_t epoch = 0;
  std::vector<Assignment> updates;
  bool operator==(const UpdateBroadcast&) const = default;
};

struct EpochBegin {
  std::uint64_t epoch = 0;
  std::uint32_t level_index = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t band_start = 0;
  std::uint32_t band_rows = 0;
  std::uint64_t max_iter = 0;
  double tolerance = 0.0;
  std::vector<double> values;        // (band_rows + 2) * width, ghost rows included
  std::vector<std::uint8_t> mask;    // same layout
  bool operator==(const EpochBegin&) const = default;
};

/// Worker progress. `complete` false: the band's first row is done for
/// `sweep` (first_row only). `complete` true: the whole sweep is done, with
/// last_row and the band's residual.
struct SweepReport {
  std::uint32_t rank = 0;
  std::uint64_t epoch = 0;
  std::uint64_t sweep = 0;
  double residual = 0.0;
  std::uint32_t sweep_us = 0;
  bool aborted = false;
  bool complete = false;
  std::uint32_t forwarded = 0;  // update broadcasts this rank has sent so far
  std::vector<double> first_row;
  std::vector<double> last_row;
  bool operator==(const SweepReport&) const = default;
};

/// Coordinator to worker. A non-empty ghost row is a halo valid from sweep
/// `sweep` on; stop / want_band refer to the band as it was after `sweep`.
struct SweepAck {
  std::uint64_t epoch = 0;
  std::uint64_t sweep = 0;
  double global_residual = 0.0;
  bool stop = false;
  bool want_band = false;
  std::vector<double> ghost_above;
  std::vector<double> ghost_below;
  bool operator==(const SweepAck&) const = default;
};

struct BandData {
  std::uint32_t rank = 0;
  std::uint64_t epoch = 0;
  std::uint64_t sweep = 0;
  std::uint32_t band_start = 0;
  std::uint32_t band_rows = 0;
  std::vector<double> values;  // band_rows * width
  bool operator==(const BandData&) const = default;
};

using Message = std::variant<Hello, ParamUpdate, GeometryUpdate, ResultFrame, LevelSwitch, Stats,
                             Ack, Bye, WorkerJoin, TopologyAssign, UpdateBroadcast, EpochBegin,
                             SweepReport, SweepAck, BandData>;

MsgType type_of(const Message& m) noexcept;
std::string_view type_name(MsgType t) noexcept;

}  // namespace steer::protocol
