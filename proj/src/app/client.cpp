#include "steer/app/client.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <sstream>

#include "steer/error.hpp"
#include "steer/protocol/session.hpp"
#include "steer/protocol/websocket.hpp"

namespace steer::app {
namespace {

using Clock = std::chrono::steady_clock;
namespace pr = protocol;

std::string edit_text(const pr::GeometryUpdate& g) {
  static const char* ops[] = {"add", "move", "delete"};
  std::ostringstream out;
  out << ops[static_cast<int>(g.op)] << ' '
      << (g.entity == heat::EntityClass::HeatSource ? "source" : "boundary") << ' ' << g.id << ' '
      << g.x << ',' << g.y;
  if (g.temperature) out << " T=" << *g.temperature;
  return out.str();
}

}  // namespace

std::string format_entry(const TranscriptEntry& e) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << e.t_ms << ' ' << (e.sent ? "sent" : "recv") << ' ' << pr::type_name(e.type);
  out.unsetf(std::ios::fixed);
  out.precision(6);
  if (e.epoch) out << " epoch=" << *e.epoch;
  if (e.level) out << " level=" << *e.level;
  if (e.iteration) out << " iteration=" << *e.iteration;
  if (e.residual) out << " residual=" << *e.residual;
  if (!e.detail.empty()) out << ' ' << e.detail;
  return out.str();
}

std::string format_transcript(const std::vector<TranscriptEntry>& t) {
  std::string out;
  for (const auto& e : t) out += format_entry(e) + '\n';
  return out;
}

std::vector<std::uint32_t> level_sequence(const std::vector<TranscriptEntry>& t) {
  std::vector<std::uint32_t> out;
  for (const auto& e : t) {
    if (e.sent || e.type != pr::MsgType::LevelSwitch || !e.level) continue;
    if (out.empty() || out.back() != *e.level) out.push_back(*e.level);
  }
  return out;
}

Value infer_value(const std::string& text) {
  if (text == "true" || text == "false") return parse_value(VarKind::Bool, text);
  if (text.find(',') != std::string::npos) return parse_value(VarKind::Point2d, text);
  std::int64_t i = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (ec == std::errc{} && ptr == text.data() + text.size()) return i;
  return parse_value(VarKind::Float, text);
}

SteeringClient::SteeringClient(const pr::Address& addr, bool websocket) : t0_(Clock::now()) {
  std::unique_ptr<pr::Stream> s = pr::connect(addr);
  if (websocket) {
    const std::string host =
        addr.kind == pr::Address::Kind::Tcp ? addr.host + ":" + std::to_string(addr.port) : "localhost";
    s = pr::connect_websocket(std::move(s), host, std::string(pr::kWebSocketPath));
  }
  channel_ = std::make_unique<pr::Channel>(std::move(s));
  record(true, pr::Hello{});
  pr::open_session(*channel_, pr::ClientKind::Headless);
  record(false, pr::Ack{1});
  reader_ = std::thread([this] { reader_loop(); });
}

SteeringClient::~SteeringClient() {
  channel_->close();
  if (reader_.joinable()) reader_.join();
}

void SteeringClient::record(bool sent, const pr::Message& m) {
  TranscriptEntry e;
  e.t_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
  e.sent = sent;
  e.type = pr::type_of(m);
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, pr::ResultFrame>) {
          e.epoch = msg.epoch;
          e.level = msg.level_index;
          e.iteration = msg.iteration;
          e.residual = msg.residual;
          e.detail = std::to_string(msg.width) + "x" + std::to_string(msg.height);
        } else if constexpr (std::is_same_v<T, pr::LevelSwitch>) {
          e.level = msg.to_index;
          e.detail = "from=" + std::to_string(msg.from_index) + " reason=" + msg.reason;
        } else if constexpr (std::is_same_v<T, pr::Stats>) {
          e.epoch = msg.epoch;
          std::ostringstream d;
          d << "overhead_pct=" << msg.overhead_pct << " restart_latency_us=" << msg.restart_latency_us
            << " coalesced=" << msg.updates_coalesced;
          e.detail = d.str();
        } else if constexpr (std::is_same_v<T, pr::ParamUpdate>) {
          e.detail = msg.name + "=" + format_value(msg.value);
        } else if constexpr (std::is_same_v<T, pr::GeometryUpdate>) {
          e.detail = edit_text(msg);
        } else if constexpr (std::is_same_v<T, pr::Ack>) {
          e.detail = "ref=" + std::to_string(msg.ref_msg);
        }
      },
      m);
  std::lock_guard lock(mu_);
  transcript_.push_back(std::move(e));
}

void SteeringClient::reader_loop() {
  for (;;) {
    std::optional<pr::Message> m;
    try {
      m = channel_->recv();
    } catch (const Error& e) {
      spdlog::warn("client: {}", e.what());
    }
    if (!m) break;
    record(false, *m);
    std::lock_guard lock(mu_);
    if (auto* f = std::get_if<pr::ResultFrame>(&*m)) {
      max_epoch_ = std::max(max_epoch_, f->epoch);
      if (f->residual <= tolerance_) {
        converged_epoch_ = any_converged_ ? std::max(converged_epoch_, f->epoch) : f->epoch;
        any_converged_ = true;
      }
      last_frame_ = std::move(*f);
    } else if (auto* sw = std::get_if<pr::LevelSwitch>(&*m)) {
      level_ = sw->to_index;
    } else if (auto* p = std::get_if<pr::ParamUpdate>(&*m)) {
      if (p->name == "tolerance" && std::holds_alternative<double>(p->value)) {
        tolerance_ = std::get<double>(p->value);
      }
    } else if (std::holds_alternative<pr::Ack>(*m)) {
      ++acks_;
    } else if (std::holds_alternative<pr::Bye>(*m)) {
      cv_.notify_all();
      break;
    }
    cv_.notify_all();
  }
  std::lock_guard lock(mu_);
  connected_ = false;
  cv_.notify_all();
}

void SteeringClient::send(const pr::Message& m) {
  if (!channel_->send(m)) throw TransportError("connection to the server is closed");
  record(true, m);
}

void SteeringClient::bye() {
  if (channel_->send(pr::Bye{})) record(true, pr::Bye{});
  channel_->flush();
}

std::vector<TranscriptEntry> SteeringClient::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}
std::optional<std::uint32_t> SteeringClient::level() const {
  std::lock_guard lock(mu_);
  return level_;
}
std::uint64_t SteeringClient::max_epoch() const {
  std::lock_guard lock(mu_);
  return max_epoch_;
}
std::optional<pr::ResultFrame> SteeringClient::last_frame() const {
  std::lock_guard lock(mu_);
  return last_frame_;
}
double SteeringClient::tolerance() const {
  std::lock_guard lock(mu_);
  return tolerance_;
}
std::uint32_t SteeringClient::acks() const {
  std::lock_guard lock(mu_);
  return acks_;
}
bool SteeringClient::connected() const {
  std::lock_guard lock(mu_);
  return connected_;
}

bool SteeringClient::wait_epoch(std::uint64_t epoch, Clock::time_point deadline) {
  std::unique_lock lock(mu_);
  return cv_.wait_until(lock, deadline, [&] { return last_frame_ && max_epoch_ >= epoch; });
}

bool SteeringClient::wait_acks(std::uint32_t count, Clock::time_point deadline) {
  std::unique_lock lock(mu_);
  return cv_.wait_until(lock, deadline, [&] { return acks_ >= count; });
}

bool SteeringClient::await_converged(std::optional<std::uint64_t> after_epoch,
                                     std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] {
    return any_converged_ && (!after_epoch || converged_epoch_ > *after_epoch);
  });
}

bool SteeringClient::wait_level(std::uint32_t level, Clock::time_point deadline) {
  std::unique_lock lock(mu_);
  return cv_.wait_until(lock, deadline, [&] { return level_ == level; });
}

ScriptOutcome run_script(const Script& script, const pr::Address& server, const ScriptOptions& opts) {
  using K = ScriptAction::Kind;
  SteeringClient client(server, opts.websocket);
  ScriptOutcome out;
  const auto start = Clock::now();
  // Epoch of the newest frame seen before the latest update went out; a
  // converged frame only counts if it is newer than that.
  std::optional<std::uint64_t> epoch_before_update;
  auto fail = [&](const ScriptAction& a, const std::string& why) {
    out.ok = false;
    out.failure = "script line " + std::to_string(a.line) + " (at " + std::to_string(a.at_ms) +
                  " ms): " + why;
  };
  for (const auto& a : script.actions) {
    std::this_thread::sleep_until(start + std::chrono::milliseconds(a.at_ms));
    auto geometry = [&](heat::EditOp op, heat::EntityClass cls) {
      pr::GeometryUpdate g;
      g.op = op;
      g.entity = cls;
      g.id = a.id;
      g.x = a.x;
      g.y = a.y;
      if (op == heat::EditOp::Add) g.temperature = a.temperature;
      return g;
    };
    auto send_update = [&](const pr::Message& m) {
      epoch_before_update = client.max_epoch();
      client.send(m);
    };
    switch (a.kind) {
      case K::Param:
        send_update(pr::ParamUpdate{a.name, infer_value(a.value)});
        break;
      case K::AddSource:
        send_update(geometry(heat::EditOp::Add, heat::EntityClass::HeatSource));
        break;
      case K::MoveSource:
        send_update(geometry(heat::EditOp::Move, heat::EntityClass::HeatSource));
        break;
      case K::DeleteSource:
        send_update(geometry(heat::EditOp::Delete, heat::EntityClass::HeatSource));
        break;
      case K::AddBoundary:
        send_update(geometry(heat::EditOp::Add, heat::EntityClass::BoundaryPoint));
        break;
      case K::MoveBoundary:
        send_update(geometry(heat::EditOp::Move, heat::EntityClass::BoundaryPoint));
        break;
      case K::DeleteBoundary:
        send_update(geometry(heat::EditOp::Delete, heat::EntityClass::BoundaryPoint));
        break;
      case K::ExpectLevel:
        if (!client.wait_level(a.level, Clock::now() + std::chrono::milliseconds(a.wait_ms))) {
          const auto cur = client.level();
          fail(a, "expected level " + std::to_string(a.level) + ", server is at " +
                      (cur ? std::to_string(*cur) : std::string("unknown")));
        }
        break;
      case K::AwaitConverged:
        if (!client.await_converged(epoch_before_update, std::chrono::milliseconds(a.wait_ms))) {
          fail(a, "no converged frame within " + std::to_string(a.wait_ms) + " ms");
        }
        break;
    }
    if (!out.ok) break;
  }
  if (out.ok) std::this_thread::sleep_for(opts.linger);
  client.bye();
  out.transcript = client.transcript();
  return out;
}

}  // namespace steer::app
