#include "steer/app/server.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cstring>

#include "steer/error.hpp"
#include "steer/heat/scenario.hpp"
#include "steer/hierarchy/transfer.hpp"
#include "steer/protocol/session.hpp"
#include "steer/protocol/websocket.hpp"

namespace steer::app {
namespace {

using Clock = std::chrono::steady_clock;
namespace pr = protocol;

heat::GeometryEdit to_edit(const pr::GeometryUpdate& g) {
  return {g.op, g.entity, g.id, g.x, g.y, g.temperature};
}

/// Reads exactly n bytes; false at end of stream.
bool read_exact(pr::Stream& s, std::uint8_t* out, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const std::size_t k = s.read_some({out + got, n - got});
    if (k == 0) return false;
    got += k;
  }
  return true;
}

}  // namespace

Server::Server(Config cfg, std::string worker_exe) : cfg_(std::move(cfg)), started_(Clock::now()) {
  cfg_.validate();
  policy_ = cfg_.policy();
  scenario_latest_ = cfg_.load_scenario();
  try {
    scenario_latest_.validate();
  } catch (const ParseError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  level_target_ = cfg_.levels.finest();
  max_iter_ = registry_.register_steerable("max_iter", VarKind::Int,
                                           static_cast<std::int64_t>(cfg_.max_iter));
  tolerance_ = registry_.register_steerable("tolerance", VarKind::Float, cfg_.tolerance);
  level_ = registry_.register_steerable("level", VarKind::Int,
                                        static_cast<std::int64_t>(level_target_));
  scenario_ = registry_.register_steerable("scenario", VarKind::Blob,
                                           to_blob(heat::format_scenario(scenario_latest_)));

  cluster::ClusterOptions co;
  co.workers = cfg_.workers;
  co.fanout = cfg_.fanout;
  co.mode = cfg_.mode == "thread" ? cluster::ClusterOptions::Mode::Thread
                                  : cluster::ClusterOptions::Mode::Process;
  co.tick = cfg_.tick().interval;
  co.worker_exe = std::move(worker_exe);
  co.gather_interval = std::chrono::milliseconds(static_cast<std::int64_t>(cfg_.gather_ms));
  co.initial_height = cfg_.levels.at(level_target_).height;
  listener_ = pr::Listener::open(pr::Address::parse(cfg_.listen));
  address_ = listener_->address();
  cluster_ = std::make_unique<cluster::Cluster>(co);

  steering_ = std::make_unique<Steering>(registry_, cfg_.tick(), &sink_);
  steering_->set_apply_hook([this](std::uint64_t epoch, const std::vector<Assignment>& updates) {
    cluster_->broadcast(epoch, updates);
  });
}

Server::~Server() {
  stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (controller_thread_.joinable()) controller_thread_.join();
  std::list<std::unique_ptr<Client>> clients;
  {
    std::lock_guard lock(clients_mu_);
    clients.swap(clients_);
  }
  for (auto& c : clients) {
    if (c->thread.joinable()) c->thread.join();
  }
  steering_.reset();
  cluster_.reset();
}

void Server::run() {
  accept_thread_ = std::thread([this] { accept_loop(); });
  controller_thread_ = std::thread([this] { controller_loop(); });
  spdlog::info("listening on {} with {} rank(s), levels {}", address_.to_string(), cfg_.workers,
               cfg_.levels.to_string());
  try {
    steering_->run_steered([this](const Snapshot& s, EpochContext& ctx) { return compute(s, ctx); });
  } catch (...) {
    stop();
    throw;
  }
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  steering_->stop();
  listener_->close();
  std::lock_guard lock(clients_mu_);
  for (auto& c : clients_) {
    std::lock_guard cl(c->mu);
    if (c->channel) {
      c->channel->send(pr::Bye{});
      c->channel->flush();
      c->channel->close();
    } else if (c->raw) {
      c->raw->close();
    }
  }
}

std::vector<pid_t> Server::worker_pids() const { return cluster_->worker_pids(); }
SteeringStats Server::stats() const { return steering_->stats(); }
std::uint64_t Server::consistency_errors() const { return cluster_->consistency_errors(); }

std::size_t Server::sessions() const {
  std::lock_guard lock(clients_mu_);
  std::size_t n = 0;
  for (const auto& c : clients_) {
    std::lock_guard cl(c->mu);
    n += c->channel && !c->done ? 1 : 0;
  }
  return n;
}

heat::Grid Server::seed(const std::string& key, const heat::Scenario& s, std::size_t level) {
  if (key != solution_key_) {
    solutions_.clear();
    solution_key_ = key;
  }
  const auto dims = cfg_.levels.at(level);
  if (auto it = solutions_.find(level); it != solutions_.end()) return it->second;
  // Multilevel start: prolong the finest converged level below this one.
  for (std::size_t l = level; l-- > 0;) {
    if (auto it = solutions_.find(l); it != solutions_.end()) {
      return hierarchy::prolong_to(it->second, dims, s);
    }
  }
  return heat::rasterize(s, dims.width, dims.height);
}

std::uint64_t Server::compute(const Snapshot& snap, EpochContext& ctx) {
  const auto max_iter = snap.as<std::int64_t>(max_iter_);
  const double tol = snap.as<double>(tolerance_);
  const auto level = static_cast<std::size_t>(snap.as<std::int64_t>(level_));
  const std::string text = blob_text(snap.as<Blob>(scenario_));
  if (text != parsed_text_) {
    parsed_ = heat::parse_scenario(text);
    parsed_text_ = text;
  }
  const auto lvl = static_cast<std::uint32_t>(level);
  if (announced_level_ != lvl) {
    if (announced_level_) {
      publish(pr::LevelSwitch{*announced_level_, lvl, lvl < *announced_level_ ? "interaction" : "idle"});
    }
    announced_level_ = lvl;
    current_level_ = lvl;
  }
  if (pushed_params_ != std::make_pair(max_iter, tol)) {
    publish(pr::ParamUpdate{"max_iter", max_iter});
    publish(pr::ParamUpdate{"tolerance", tol});
    pushed_params_ = std::make_pair(max_iter, tol);
  }

  heat::Grid grid = seed(text, parsed_, level);
  heat::SolverConfig cfg;
  cfg.max_iter = static_cast<std::uint64_t>(max_iter);
  cfg.tolerance = tol;
  const auto t0 = Clock::now();
  const auto out = cluster_->solve(grid, cfg, snap.epoch, lvl, ctx,
                                   [this](const pr::ResultFrame& f) { publish(f); });
  if (!out.result.aborted) solutions_[level] = std::move(grid);

  const auto st = steering_->stats();
  pr::Stats stats;
  stats.epoch = snap.epoch;
  const double wall_us =
      std::chrono::duration<double, std::micro>(Clock::now() - started_).count();
  stats.overhead_pct = wall_us > 0 ? 100.0 * static_cast<double>(st.ticker_cpu_us) / wall_us : 0.0;
  stats.restart_latency_us =
      st.restart_latency_us.empty() ? 0 : static_cast<std::uint64_t>(st.restart_latency_us.back());
  stats.updates_coalesced = st.updates_coalesced;
  stats.worker_sweep_us = out.sweep_us;
  publish(stats);
  if (!out.sweep_us.empty()) {
    auto sorted = out.sweep_us;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (std::size_t r = 0; r < out.sweep_us.size(); ++r) {
      if (median > 0 && out.sweep_us[r] > 10 * median) {
        spdlog::warn("rank {} is a straggler: {} us per sweep against a median of {} us", r,
                     out.sweep_us[r], median);
      }
    }
  }
  spdlog::debug("epoch {} level {} {} sweeps in {:.1f} ms{}", snap.epoch, level,
                out.result.iterations,
                std::chrono::duration<double, std::milli>(Clock::now() - t0).count(),
                out.result.aborted ? " (aborted)" : "");
  return out.result.iterations;
}

void Server::publish(const pr::Message& m) {
  std::vector<std::shared_ptr<pr::Channel>> targets;
  {
    std::lock_guard lock(clients_mu_);
    for (auto& c : clients_) {
      std::lock_guard cl(c->mu);
      if (c->channel && !c->done) targets.push_back(c->channel);
    }
  }
  for (auto& ch : targets) ch->send(m);
}

void Server::greet(pr::Channel& ch) {
  const auto snap = registry_.snapshot();
  const auto lvl = current_level_.load();
  ch.send(pr::LevelSwitch{lvl, lvl, "session"});
  ch.send(pr::ParamUpdate{"max_iter", snap.get(max_iter_)});
  ch.send(pr::ParamUpdate{"tolerance", snap.get(tolerance_)});
}

void Server::accept_loop() {
  for (;;) {
    auto s = listener_->accept();
    if (!s) break;
    std::lock_guard lock(clients_mu_);
    // Reap finished sessions.
    for (auto it = clients_.begin(); it != clients_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        it = clients_.erase(it);
      } else {
        ++it;
      }
    }
    if (stopping_) break;
    auto c = std::make_unique<Client>();
    c->id = next_session_++;
    c->raw = s.get();
    Client& ref = *c;
    clients_.push_back(std::move(c));
    ref.thread = std::thread([this, &ref, stream = std::move(s)]() mutable {
      try {
        handle(ref, std::move(stream));
      } catch (const std::exception& e) {
        spdlog::warn("session {}: {}", ref.id, e.what());
      }
      ref.done = true;
    });
  }
}

void Server::handle(Client& c, std::unique_ptr<pr::Stream> s) {
  struct Detach {
    Client& c;
    ~Detach() {
      std::lock_guard lock(c.mu);
      c.raw = nullptr;
      if (c.channel) c.channel->close();
    }
  };
  // Each Detach is declared after the owner of the stream so it runs first.
  std::array<std::uint8_t, 4> head{};
  if (!read_exact(*s, head.data(), head.size())) {
    Detach d{c};
    return;
  }
  if (std::memcmp(head.data(), pr::kMagic.data(), 4) == 0) {
    auto stream = std::make_unique<pr::PrefixedStream>(
        std::vector<std::uint8_t>(head.begin(), head.end()), std::move(s));
    auto ch = std::make_shared<pr::Channel>(std::move(stream));
    Detach d{c};
    session(c, ch);
    return;
  }
  if (std::memcmp(head.data(), "GET ", 4) == 0) {
    const auto req = pr::read_http_request(*s, "GET ");
    const auto path = req.target.substr(0, req.target.find('?'));
    if (path == pr::kWebSocketPath && req.is_websocket_upgrade()) {
      auto ch = std::make_shared<pr::Channel>(pr::accept_websocket(std::move(s), req));
      Detach d{c};
      session(c, ch);
      return;
    }
    pr::serve_static(*s, req, cfg_.web_root);
    Detach d{c};
    s->close();
    return;
  }
  Detach d{c};
  spdlog::warn("session {}: unrecognized connection preamble", c.id);
}

void Server::session(Client& c, const std::shared_ptr<pr::Channel>& ch) {
  pr::Session sess = pr::accept_session(*ch, c.id);
  greet(*ch);
  {
    std::lock_guard lock(c.mu);
    if (stopping_) return;
    c.channel = ch;
  }
  spdlog::info("session {} open ({})", c.id, ch->peer());
  for (;;) {
    auto m = ch->recv();
    if (!m) break;
    ++sess.received;
    sess.last_seen = Clock::now();
    if (std::holds_alternative<pr::Bye>(*m)) break;
    if (submit_from(c.id, *m)) ch->send(pr::Ack{sess.received});
  }
  spdlog::info("session {} closed", c.id);
}

bool Server::submit_from(std::uint64_t session, const pr::Message& m) {
  std::vector<Assignment> updates;
  std::lock_guard lock(ui_mu_);
  heat::Scenario next = scenario_latest_;
  bool geometry = false;
  if (auto* p = std::get_if<pr::ParamUpdate>(&m)) {
    Value v = p->value;
    if (p->name == "level" || p->name == "scenario") {
      spdlog::warn("session {}: `{}` is managed by the server", session, p->name);
      return false;
    }
    if (p->name == "tolerance" && std::holds_alternative<std::int64_t>(v)) {
      v = static_cast<double>(std::get<std::int64_t>(v));
    }
    const bool bad_range =
        (p->name == "tolerance" && std::holds_alternative<double>(v) && !(std::get<double>(v) > 0.0)) ||
        (p->name == "max_iter" && std::holds_alternative<std::int64_t>(v) && std::get<std::int64_t>(v) < 1);
    if (bad_range) {
      spdlog::warn("session {}: {} out of range", session, p->name);
      return false;
    }
    updates.emplace_back(p->name, std::move(v));
  } else if (auto* g = std::get_if<pr::GeometryUpdate>(&m)) {
    auto edit = to_edit(*g);
    if (edit.op == heat::EditOp::Add && edit.id == 0) edit.id = next.next_free_id(edit.entity);
    try {
      next.apply(edit);
      next.validate();
    } catch (const ParseError& e) {
      spdlog::warn("session {}: geometry edit rejected: {}", session, e.what());
      return false;
    }
    updates.emplace_back("scenario", to_blob(heat::format_scenario(next)));
    geometry = true;
  } else {
    spdlog::warn("session {}: unexpected {}", session, pr::type_name(pr::type_of(m)));
    return false;
  }
  const auto now = Clock::now();
  clock_.record(now);
  const auto lvl = hierarchy::choose_level(clock_, policy_, level_target_, cfg_.levels.count(), now);
  if (lvl != level_target_) {
    updates.emplace_back("level", static_cast<std::int64_t>(lvl));
  }
  try {
    steering_->submit(UpdateBatch{updates, now, session});
  } catch (const BatchError& e) {
    spdlog::warn("session {}: update rejected: {}", session, e.what());
    return false;
  }
  level_target_ = lvl;
  if (geometry) scenario_latest_ = std::move(next);
  return true;
}

void Server::controller_loop() {
  while (!stopping_) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    std::lock_guard lock(ui_mu_);
    const auto now = Clock::now();
    const auto lvl = hierarchy::choose_level(clock_, policy_, level_target_, cfg_.levels.count(), now);
    if (lvl <= level_target_) continue;
    // Promote only once the current level has produced its answer, one step
    // per finished epoch.
    const auto epoch = registry_.epoch();
    if (steering_->completed_epoch() != epoch || promoted_at_epoch_ == epoch) continue;
    try {
      steering_->submit(UpdateBatch{{{"level", static_cast<std::int64_t>(lvl)}}, now, 0});
    } catch (const BatchError& e) {
      spdlog::error("promotion rejected: {}", e.what());
      continue;
    }
    promoted_at_epoch_ = epoch;
    level_target_ = lvl;
  }
}

}  // namespace steer::app
