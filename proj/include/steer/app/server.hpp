#pragma once

#include <sys/types.h>

#include <atomic>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "steer/app/config.hpp"
#include "steer/cluster/coordinator.hpp"
#include "steer/core/events.hpp"
#include "steer/core/registry.hpp"
#include "steer/core/steering.hpp"
#include "steer/hierarchy/levels.hpp"
#include "steer/protocol/channel.hpp"
#include "steer/protocol/transport.hpp"

namespace steer::app {

/// The steering back end: steerable registry, epoch loop over the cluster,
/// level policy, and client sessions over TCP and WebSocket on one port.
///
/// Steerable variables: max_iter (int), tolerance (float), plus two the
/// server drives itself: level (int) and scenario (blob, scenario text).
class Server {
 public:
  /// Opens the listener and starts the worker ranks (process mode runs
  /// `worker_exe`, by default this executable). Throws ConfigError or
  /// TransportError when that is impossible.
  explicit Server(Config cfg, std::string worker_exe = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// The bound address (the real port when `listen` asked for port 0).
  protocol::Address address() const { return address_; }

  /// Runs the epoch loop on the calling thread until stop().
  void run();
  /// Safe from any thread, repeatable.
  void stop();

  std::vector<pid_t> worker_pids() const;
  SteeringStats stats() const;
  std::size_t sessions() const;
  std::uint64_t consistency_errors() const;

 private:
  struct Client {
    std::uint64_t id = 0;
    std::mutex mu;
    protocol::Stream* raw = nullptr;  // for stop(); cleared before the stream dies
    std::shared_ptr<protocol::Channel> channel;  // set once the session is open
    std::thread thread;
    std::atomic<bool> done{false};
  };

  std::uint64_t compute(const Snapshot& snap, EpochContext& ctx);
  void accept_loop();
  void handle(Client& c, std::unique_ptr<protocol::Stream> s);
  void session(Client& c, const std::shared_ptr<protocol::Channel>& ch);
  /// Turns one client message into a batch; false if it was rejected.
  bool submit_from(std::uint64_t session, const protocol::Message& m);
  void controller_loop();
  void publish(const protocol::Message& m);
  void greet(protocol::Channel& ch);
  heat::Grid seed(const std::string& key, const heat::Scenario& s, std::size_t level);

  Config cfg_;
  hierarchy::LevelPolicy policy_;
  Registry registry_;
  VarHandle max_iter_, tolerance_, level_, scenario_;
  LogSink sink_;
  std::unique_ptr<Steering> steering_;
  std::unique_ptr<cluster::Cluster> cluster_;
  std::unique_ptr<protocol::Listener> listener_;
  protocol::Address address_;
  std::chrono::steady_clock::time_point started_;

  // Interaction state; the latest scenario includes edits not yet applied.
  std::mutex ui_mu_;
  hierarchy::InteractionClock clock_;
  std::size_t level_target_ = 0;
  std::optional<std::uint64_t> promoted_at_epoch_;
  heat::Scenario scenario_latest_;

  mutable std::mutex clients_mu_;
  std::list<std::unique_ptr<Client>> clients_;
  std::uint64_t next_session_ = 1;

  // Compute-thread state.
  std::string solution_key_;
  std::map<std::size_t, heat::Grid> solutions_;  // converged, per level
  std::string parsed_text_;
  heat::Scenario parsed_;
  std::optional<std::uint32_t> announced_level_;
  std::atomic<std::uint32_t> current_level_{0};
  std::optional<std::pair<std::int64_t, double>> pushed_params_;

  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::thread controller_thread_;
};

}  // namespace steer::app
