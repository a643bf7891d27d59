#include "steer/protocol/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "steer/error.hpp"

namespace steer::protocol {
namespace {

constexpr std::size_t kMaxArray = std::size_t{1} << 31;

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void flag(bool b) { u8(b ? 1 : 0); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str8(const std::string& s, const char* what) {
    if (s.size() > 255) throw EncodeError(std::string(what) + " longer than 255 bytes");
    u8(static_cast<std::uint8_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void count(std::size_t n, const char* what) {
    if (n > kMaxArray) throw EncodeError(std::string(what) + " exceeds 2^31 entries");
    uint(static_cast<std::uint32_t>(n));
  }
  void f64s(const std::vector<double>& v, const char* what) {
    count(v.size(), what);
    for (double d : v) f64(d);
  }
  void bytes(const std::vector<std::uint8_t>& v, const char* what) {
    count(v.size(), what);
    out_.insert(out_.end(), v.begin(), v.end());
  }
  void value(const Value& v) {
    u8(static_cast<std::uint8_t>(kind_of(v)));
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::int64_t>) uint(static_cast<std::uint64_t>(x));
          else if constexpr (std::is_same_v<T, double>) f64(x);
          else if constexpr (std::is_same_v<T, bool>) flag(x);
          else if constexpr (std::is_same_v<T, Point2d>) { f64(x.x); f64(x.y); }
          else bytes(x, "blob value");
        },
        v);
  }

 private:
  Bytes& out_;
};

struct Malformed {
  const char* why;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  template <class T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8() { return uint<std::uint8_t>(); }
  bool flag() {
    const auto b = u8();
    if (b > 1) throw Malformed{"boolean byte out of range"};
    return b == 1;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str8() {
    const std::size_t n = u8();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t count(std::size_t elem) {
    const std::size_t n = uint<std::uint32_t>();
    if (n > kMaxArray) throw Malformed{"array too long"};
    need(n * elem);  // before allocating
    return n;
  }
  std::vector<double> f64s() {
    std::vector<double> v(count(8));
    for (auto& d : v) d = f64();
    return v;
  }
  std::vector<std::uint8_t> bytes() {
    const std::size_t n = count(1);
    std::vector<std::uint8_t> v(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return v;
  }
  Value value() {
    const auto code = u8();
    switch (code) {
      case 0: return static_cast<std::int64_t>(uint<std::uint64_t>());
      case 1: return f64();
      case 2: return flag();
      case 3: {
        const double x = f64();
        return Point2d{x, f64()};
      }
      case 4: return bytes();
      default: throw Malformed{"unknown value kind"};
    }
  }
  void finish() const {
    if (pos_ != in_.size()) throw Malformed{"trailing payload bytes"};
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Malformed{"payload shorter than its fields"};
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_area(std::size_t got, std::uint64_t w, std::uint64_t h, const char* what) {
  if (got != w * h) throw EncodeError(std::string(what) + " length does not match its dimensions");
}

void put_payload(Writer& w, const Message& m) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Hello>) {
          w.uint(x.protocol_version);
          w.u8(static_cast<std::uint8_t>(x.client_kind));
        } else if constexpr (std::is_same_v<T, ParamUpdate>) {
          w.str8(x.name, "parameter name");
          w.value(x.value);
        } else if constexpr (std::is_same_v<T, GeometryUpdate>) {
          w.u8(static_cast<std::uint8_t>(x.op));
          w.u8(static_cast<std::uint8_t>(x.entity));
          w.uint(x.id);
          w.f64(x.x);
          w.f64(x.y);
          w.flag(x.temperature.has_value());
          if (x.temperature) w.f64(*x.temperature);
        } else if constexpr (std::is_same_v<T, ResultFrame>) {
          check_area(x.field.size(), x.width, x.height, "result field");
          w.uint(x.epoch);
          w.uint(x.level_index);
          w.uint(x.iteration);
          w.f64(x.residual);
          w.uint(x.width);
          w.uint(x.height);
          w.f64s(x.field, "result field");
        } else if constexpr (std::is_same_v<T, LevelSwitch>) {
          w.uint(x.from_index);
          w.uint(x.to_index);
          w.str8(x.reason, "level switch reason");
        } else if constexpr (std::is_same_v<T, Stats>) {
          w.uint(x.epoch);
          w.f64(x.overhead_pct);
          w.uint(x.restart_latency_us);
          w.uint(x.updates_coalesced);
          w.count(x.worker_sweep_us.size(), "worker sweep list");
          for (auto v : x.worker_sweep_us) w.uint(v);
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.uint(x.ref_msg);
        } else if constexpr (std::is_same_v<T, Bye>) {
        } else if constexpr (std::is_same_v<T, WorkerJoin>) {
          w.uint(x.rank);
          w.uint(x.pid);
        } else if constexpr (std::is_same_v<T, TopologyAssign>) {
          w.uint(x.rank);
          w.uint(x.worker_count);
          w.uint(x.fanout);
          w.uint(x.tick_us);
          w.str8(x.parent_addr, "parent address");
          w.str8(x.listen_addr, "listen address");
        } else if constexpr (std::is_same_v<T, UpdateBroadcast>) {
          w.uint(x.epoch);
          w.count(x.updates.size(), "update list");
          for (const auto& [name, value] : x.updates) {
            w.str8(name, "parameter name");
            w.value(value);
          }
        } else if constexpr (std::is_same_v<T, EpochBegin>) {
          check_area(x.values.size(), std::uint64_t{x.band_rows} + 2, x.width, "band values");
          check_area(x.mask.size(), std::uint64_t{x.band_rows} + 2, x.width, "band mask");
          w.uint(x.epoch);
          w.uint(x.level_index);
          w.uint(x.width);
          w.uint(x.height);
          w.uint(x.band_start);
          w.uint(x.band_rows);
          w.uint(x.max_iter);
          w.f64(x.tolerance);
          w.f64s(x.values, "band values");
          w.bytes(x.mask, "band mask");
        } else if constexpr (std::is_same_v<T, SweepReport>) {
          w.uint(x.rank);
          w.uint(x.epoch);
          w.uint(x.sweep);
          w.f64(x.residual);
          w.uint(x.sweep_us);
          w.flag(x.aborted);
          w.flag(x.complete);
          w.uint(x.forwarded);
          w.f64s(x.first_row, "first row");
          w.f64s(x.last_row, "last row");
        } else if constexpr (std::is_same_v<T, SweepAck>) {
          w.uint(x.epoch);
          w.uint(x.sweep);
          w.f64(x.global_residual);
          w.flag(x.stop);
          w.flag(x.want_band);
          w.f64s(x.ghost_above, "ghost row");
          w.f64s(x.ghost_below, "ghost row");
        } else if constexpr (std::is_same_v<T, BandData>) {
          w.uint(x.rank);
          w.uint(x.epoch);
          w.uint(x.sweep);
          w.uint(x.band_start);
          w.uint(x.band_rows);
          w.f64s(x.values, "band values");
        }
      },
      m);
}

Message get_payload(MsgType t, Reader& r) {
  switch (t) {
    case MsgType::Hello: {
      Hello h;
      h.protocol_version = r.uint<std::uint16_t>();
      const auto kind = r.u8();
      if (kind > 2) throw Malformed{"unknown client kind"};
      h.client_kind = static_cast<ClientKind>(kind);
      return h;
    }
    case MsgType::ParamUpdate: {
      ParamUpdate p;
      p.name = r.str8();
      p.value = r.value();
      return p;
    }
    case MsgType::GeometryUpdate: {
      GeometryUpdate g;
      const auto op = r.u8();
      const auto entity = r.u8();
      if (op > 2 || entity > 1) throw Malformed{"unknown geometry op or entity"};
      g.op = static_cast<heat::EditOp>(op);
      g.entity = static_cast<heat::EntityClass>(entity);
      g.id = r.uint<std::uint32_t>();
      g.x = r.f64();
      g.y = r.f64();
      if (r.flag()) g.temperature = r.f64();
      return g;
    }
    case MsgType::ResultFrame: {
      ResultFrame f;
      f.epoch = r.uint<std::uint64_t>();
      f.level_index = r.uint<std::uint32_t>();
      f.iteration = r.uint<std::uint64_t>();
      f.residual = r.f64();
      f.width = r.uint<std::uint32_t>();
      f.height = r.uint<std::uint32_t>();
      f.field = r.f64s();
      if (f.field.size() != std::uint64_t{f.width} * f.height) {
        throw Malformed{"result field length does not match its dimensions"};
      }
      return f;
    }
    case MsgType::LevelSwitch: {
      LevelSwitch l;
      l.from_index = r.uint<std::uint32_t>();
      l.to_index = r.uint<std::uint32_t>();
      l.reason = r.str8();
      return l;
    }
    case MsgType::Stats: {
      Stats s;
      s.epoch = r.uint<std::uint64_t>();
      s.overhead_pct = r.f64();
      s.restart_latency_us = r.uint<std::uint64_t>();
      s.updates_coalesced = r.uint<std::uint64_t>();
      s.worker_sweep_us.resize(r.count(4));
      for (auto& v : s.worker_sweep_us) v = r.uint<std::uint32_t>();
      return s;
    }
    case MsgType::Ack: return Ack{r.uint<std::uint32_t>()};
    case MsgType::Bye: return Bye{};
    case MsgType::WorkerJoin: {
      WorkerJoin j;
      j.rank = r.uint<std::uint32_t>();
      j.pid = r.uint<std::uint32_t>();
      return j;
    }
    case MsgType::TopologyAssign: {
      TopologyAssign a;
      a.rank = r.uint<std::uint32_t>();
      a.worker_count = r.uint<std::uint32_t>();
      a.fanout = r.uint<std::uint32_t>();
      a.tick_us = r.uint<std::uint32_t>();
      a.parent_addr = r.str8();
      a.listen_addr = r.str8();
      return a;
    }
    case MsgType::UpdateBroadcast: {
      UpdateBroadcast u;
      u.epoch = r.uint<std::uint64_t>();
      const std::size_t n = r.count(2);
      for (std::size_t i = 0; i < n; ++i) {
        std::string name = r.str8();
        u.updates.emplace_back(std::move(name), r.value());
      }
      return u;
    }
    case MsgType::EpochBegin: {
      EpochBegin e;
      e.epoch = r.uint<std::uint64_t>();
      e.level_index = r.uint<std::uint32_t>();
      e.width = r.uint<std::uint32_t>();
      e.height = r.uint<std::uint32_t>();
      e.band_start = r.uint<std::uint32_t>();
      e.band_rows = r.uint<std::uint32_t>();
      e.max_iter = r.uint<std::uint64_t>();
      e.tolerance = r.f64();
      e.values = r.f64s();
      e.mask = r.bytes();
      const std::uint64_t area = (std::uint64_t{e.band_rows} + 2) * e.width;
      if (e.values.size() != area || e.mask.size() != area) {
        throw Malformed{"band payload does not match its dimensions"};
      }
      return e;
    }
    case MsgType::SweepReport: {
      SweepReport s;
      s.rank = r.uint<std::uint32_t>();
      s.epoch = r.uint<std::uint64_t>();
      s.sweep = r.uint<std::uint64_t>();
      s.residual = r.f64();
      s.sweep_us = r.uint<std::uint32_t>();
      s.aborted = r.flag();
      s.complete = r.flag();
      s.forwarded = r.uint<std::uint32_t>();
      s.first_row = r.f64s();
      s.last_row = r.f64s();
      return s;
    }
    case MsgType::SweepAck: {
      SweepAck a;
      a.epoch = r.uint<std::uint64_t>();
      a.sweep = r.uint<std::uint64_t>();
      a.global_residual = r.f64();
      a.stop = r.flag();
      a.want_band = r.flag();
      a.ghost_above = r.f64s();
      a.ghost_below = r.f64s();
      return a;
    }
    case MsgType::BandData: {
      BandData b;
      b.rank = r.uint<std::uint32_t>();
      b.epoch = r.uint<std::uint64_t>();
      b.sweep = r.uint<std::uint64_t>();
      b.band_start = r.uint<std::uint32_t>();
      b.band_rows = r.uint<std::uint32_t>();
      b.values = r.f64s();
      return b;
    }
  }
  throw Malformed{"unknown message type"};
}

bool known_type(std::uint16_t t) {
  return (t >= 1 && t <= 8) || (t >= 0x10 && t <= 0x16);
}

}  // namespace

void encode_into(const Message& m, Bytes& out) {
  const std::size_t start = out.size();
  out.resize(start + kHeaderSize);
  Writer w(out);
  try {
    put_payload(w, m);
  } catch (...) {
    out.resize(start);
    throw;
  }
  const std::size_t len = out.size() - start - kHeaderSize;
  if (len > kMaxPayload) {
    out.resize(start);
    throw EncodeError("payload exceeds the frame size limit");
  }
  std::uint8_t* h = out.data() + start;
  std::memcpy(h, kMagic.data(), 4);
  const auto type = static_cast<std::uint16_t>(type_of(m));
  h[4] = static_cast<std::uint8_t>(kVersion);
  h[5] = static_cast<std::uint8_t>(kVersion >> 8);
  h[6] = static_cast<std::uint8_t>(type);
  h[7] = static_cast<std::uint8_t>(type >> 8);
  for (int i = 0; i < 4; ++i) h[8 + i] = static_cast<std::uint8_t>(len >> (8 * i));
}

Bytes encode(const Message& m) {
  Bytes out;
  encode_into(m, out);
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) noexcept {
  DecodeResult res;
  auto corrupt = [&](const char* why) {
    res.status = DecodeResult::Status::Corrupt;
    res.error = why;
    return res;
  };
  const std::size_t probe = std::min<std::size_t>(bytes.size(), 4);
  if (probe > 0 && std::memcmp(bytes.data(), kMagic.data(), probe) != 0) return corrupt("bad magic");
  if (bytes.size() < kHeaderSize) return res;
  const auto version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kVersion) return corrupt("unsupported frame version");
  const auto type = static_cast<std::uint16_t>(bytes[6] | (bytes[7] << 8));
  if (!known_type(type)) return corrupt("unknown message type");
  const std::size_t len = std::size_t{bytes[8]} | (std::size_t{bytes[9]} << 8) |
                          (std::size_t{bytes[10]} << 16) | (std::size_t{bytes[11]} << 24);
  if (len > kMaxPayload) return corrupt("payload length over the limit");
  if (bytes.size() - kHeaderSize < len) return res;
  try {
    Reader r(bytes.subspan(kHeaderSize, len));
    Message m = get_payload(static_cast<MsgType>(type), r);
    r.finish();
    res.status = DecodeResult::Status::Ok;
    res.message = std::move(m);
    res.consumed = kHeaderSize + len;
    return res;
  } catch (const Malformed& e) {
    return corrupt(e.why);
  } catch (...) {
    return corrupt("payload could not be decoded");
  }
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  } else if (pos_ > (1u << 20) && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameReader::next() {
  if (corrupt_) throw ProtocolError("corrupt stream: " + *corrupt_);
  if (pos_ == buf_.size()) return std::nullopt;
  auto res = decode(std::span<const std::uint8_t>(buf_).subspan(pos_));
  switch (res.status) {
    case DecodeResult::Status::Ok:
      pos_ += res.consumed;
      return std::move(res.message);
    case DecodeResult::Status::NeedMore:
      return std::nullopt;
    case DecodeResult::Status::Corrupt:
      corrupt_ = res.error;
      throw ProtocolError("corrupt stream: " + res.error);
  }
  return std::nullopt;
}

}  // namespace steer::protocol
