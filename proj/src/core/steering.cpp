#include "steer/core/steering.hpp"

#include <ctime>
#include <map>

#include "steer/error.hpp"

namespace steer {
namespace {

constexpr std::size_t kCheckRing = 8192;

std::int64_t micros(SteadyClock::duration d) {
  return std::chrono::duration_cast<std::chrono::microseconds>(d).count();
}

std::vector<Assignment> merge(std::deque<UpdateBatch>& batches) {
  std::map<std::string, std::size_t> slot;
  std::vector<Assignment> out;
  for (auto& b : batches) {
    for (auto& [name, value] : b.updates) {
      auto [it, fresh] = slot.try_emplace(name, out.size());
      if (fresh) out.emplace_back(name, std::move(value));
      else out[it->second].second = std::move(value);
    }
  }
  return out;
}

}  // namespace

void TickConfig::validate() const {
  if (interval.count() <= 0) throw ConfigError("tick interval must be positive");
}

Steering::Steering(Registry& registry, TickConfig tick, EventSink* sink)
    : registry_(registry), sink_(sink), tick_(tick) {
  tick_.validate();
  checks_.reserve(kCheckRing);
  ticker_ = std::thread([this] { ticker_loop(); });
}

Steering::~Steering() {
  stop();
  if (ticker_.joinable()) ticker_.join();
}

TickConfig Steering::set_tick(TickConfig tick) {
  tick.validate();
  std::lock_guard lock(tick_mu_);
  const TickConfig prev = tick_;
  tick_ = tick;
  tick_cv_.notify_all();
  return prev;
}

TickConfig Steering::tick() const {
  std::lock_guard lock(tick_mu_);
  return tick_;
}

void Steering::submit(UpdateBatch batch) {
  registry_.check(batch.updates);
  if (batch.updates.empty()) return;
  std::lock_guard lock(pending_mu_);
  pending_.push_back(std::move(batch));
}

std::uint64_t Steering::apply_update(const UpdateBatch& batch) {
  registry_.check(batch.updates);
  if (batch.updates.empty()) return registry_.epoch();
  std::lock_guard lock(run_mu_);
  ++stats_.batches_received;
  return apply_locked(batch.updates, batch.received_at);
}

std::uint64_t Steering::apply_locked(const std::vector<Assignment>& merged,
                                     SteadyClock::time_point earliest) {
  const std::uint64_t epoch = registry_.apply(merged);
  ++stats_.batches_applied;
  if (apply_hook_) apply_hook_(epoch, merged);
  if (!restart_due_ || earliest < *restart_due_) restart_due_ = earliest;
  if (current_ && current_->request_abort()) abort_at_ = SteadyClock::now();
  idle_cv_.notify_all();
  return epoch;
}

void Steering::ticker_loop() {
  std::unique_lock lock(tick_mu_);
  auto next = SteadyClock::now();
  while (!stop_) {
    if (!tick_.enabled) {
      tick_cv_.wait(lock, [&] { return stop_ || tick_.enabled; });
      next = SteadyClock::now();
      continue;
    }
    next += tick_.interval;
    const auto now = SteadyClock::now();
    // After a stall, resume on the grid rather than firing a burst.
    if (next < now) next = now;
    const TickConfig seen = tick_;
    tick_cv_.wait_until(lock, next, [&] { return stop_ || !(tick_ == seen); });
    if (stop_) break;
    if (!(tick_ == seen)) {
      next = SteadyClock::now();
      continue;
    }
    lock.unlock();
    check_pending();
    timespec cpu{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &cpu);
    {
      std::lock_guard run_lock(run_mu_);
      stats_.ticker_cpu_us =
          static_cast<std::int64_t>(cpu.tv_sec) * 1000000 + cpu.tv_nsec / 1000;
    }
    lock.lock();
  }
}

void Steering::check_pending() {
  std::deque<UpdateBatch> drained;
  {
    std::lock_guard lock(pending_mu_);
    drained.swap(pending_);
  }
  const auto now = SteadyClock::now();
  const auto interval = tick().interval;
  std::lock_guard lock(run_mu_);
  if (checks_.size() < kCheckRing) {
    checks_.push_back(now);
  } else {
    checks_[checks_head_] = now;
    checks_head_ = (checks_head_ + 1) % kCheckRing;
  }
  if (!drained.empty()) {
    SteadyClock::time_point earliest = drained.front().received_at;
    for (const auto& b : drained) earliest = std::min(earliest, b.received_at);
    stats_.batches_received += drained.size();
    stats_.updates_coalesced += drained.size() - 1;
    try {
      apply_locked(merge(drained), earliest);
    } catch (const BatchError& e) {
      // Each batch passed check() on submit; nothing unregisters, so this
      // only trips on misuse.
      Event ev{Event::Type::WatchdogWarning, registry_.epoch(), 0, 0, e.what()};
      emit(ev);
    }
  }
  if (current_ && !current_->abort_requested()) {
    const auto polls = current_->polls();
    if (polls != watched_polls_) {
      watched_polls_ = polls;
      watched_since_ = now;
    } else if (!warned_ && now - watched_since_ >= 100 * interval) {
      warned_ = true;
      ++stats_.watchdog_warnings;
      emit({Event::Type::WatchdogWarning, current_->epoch(), 0, 0,
            "no abort check for " + std::to_string(micros(now - watched_since_) / 1000) +
                " ms"});
    }
  }
}

void Steering::run_steered(const ComputeFn& compute) {
  registry_.seal();
  while (!stopping()) {
    std::shared_ptr<EpochContext> ctx;
    Snapshot snap;
    {
      std::lock_guard lock(run_mu_);
      snap = registry_.snapshot();
      ctx = std::make_shared<EpochContext>(snap.epoch);
      current_ = ctx;
      watched_polls_ = 0;
      watched_since_ = SteadyClock::now();
      warned_ = false;
      abort_at_.reset();
      ++stats_.epochs_started;
      if (restart_due_) {
        stats_.restart_latency_us.push_back(micros(SteadyClock::now() - *restart_due_));
        restart_due_.reset();
      }
    }
    emit({Event::Type::EpochStart, snap.epoch, 0, 0, {}});
    std::uint64_t iterations = 0;
    try {
      iterations = compute(snap, *ctx);
    } catch (...) {
      ctx->finish();
      std::lock_guard lock(run_mu_);
      current_.reset();
      throw;
    }
    ctx->finish();
    bool aborted = false;
    std::int64_t lat = 0;
    {
      std::lock_guard lock(run_mu_);
      current_.reset();
      aborted = ctx->abort_requested();
      if (aborted) {
        ++stats_.epochs_aborted;
        if (abort_at_) lat = micros(SteadyClock::now() - *abort_at_);
      } else {
        ++stats_.epochs_completed;
        completed_ = snap.epoch;
      }
    }
    if (aborted) {
      emit({Event::Type::EpochAbort, snap.epoch, lat, iterations, {}});
      continue;
    }
    emit({Event::Type::EpochComplete, snap.epoch, 0, iterations, {}});
    std::unique_lock lock(run_mu_);
    idle_cv_.wait(lock, [&] { return stopping() || registry_.epoch() != snap.epoch; });
  }
}

void Steering::stop() {
  {
    std::lock_guard lock(tick_mu_);
    stop_ = true;
    tick_cv_.notify_all();
  }
  std::lock_guard lock(run_mu_);
  if (current_) current_->request_abort();
  idle_cv_.notify_all();
}

bool Steering::stopping() const {
  std::lock_guard lock(tick_mu_);
  return stop_;
}

std::optional<std::uint64_t> Steering::running_epoch() const {
  std::lock_guard lock(run_mu_);
  if (!current_) return std::nullopt;
  return current_->epoch();
}

std::optional<std::uint64_t> Steering::completed_epoch() const {
  std::lock_guard lock(run_mu_);
  return completed_;
}

void Steering::set_apply_hook(ApplyHook hook) {
  std::lock_guard lock(run_mu_);
  apply_hook_ = std::move(hook);
}

SteeringStats Steering::stats() const {
  std::lock_guard lock(run_mu_);
  return stats_;
}

std::vector<SteadyClock::time_point> Steering::check_times() const {
  std::lock_guard lock(run_mu_);
  std::vector<SteadyClock::time_point> out(checks_.begin() + checks_head_, checks_.end());
  out.insert(out.end(), checks_.begin(), checks_.begin() + checks_head_);
  return out;
}

void Steering::emit(Event e) {
  if (sink_) sink_->emit(e);
}

}  // namespace steer
