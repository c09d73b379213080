#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "roadrl/sim.hpp"

namespace roadrl {

/// Latest-wins mailbox between the simulation loop and stream readers.
class SnapshotHub {
 public:
  using Listener = std::function<void(std::shared_ptr<const std::string>)>;

  void publish(std::string frame);
  std::shared_ptr<const std::string> latest() const;
  std::uint64_t published() const;

  /// Listeners run on the publishing thread and must only hand the frame off.
  int subscribe(Listener fn);
  void unsubscribe(int id);
  std::size_t subscribers() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const std::string> latest_;
  std::uint64_t published_ = 0;
  int next_id_ = 0;
  std::map<int, Listener> listeners_;
};

/// Runs Simulation::tick on its own thread and publishes wire snapshots.
class SimulationRunner {
 public:
  SimulationRunner(Simulation& sim, SnapshotHub& hub) : sim_(sim), hub_(hub) {}
  ~SimulationRunner() { stop(); }

  /// max_ticks == 0 runs until stop().
  void start(std::uint64_t max_ticks = 0);
  void stop();
  bool running() const { return running_; }

 private:
  void loop(std::uint64_t max_ticks);
  void publish();

  Simulation& sim_;
  SnapshotHub& hub_;
  std::thread thread_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> running_{false};
};

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::filesystem::path model_dir = "models";
  std::chrono::milliseconds command_timeout{10'000};
  int threads = 2;
};

/// HTTP + WebSocket control surface. Handlers only enqueue commands and read
/// published snapshots; they never touch the simulation directly.
class ControlServer {
 public:
  using CommandSink = std::function<void(ControlCommand)>;

  ControlServer(std::string network_json, std::size_t vehicle_count, CommandSink sink, SnapshotHub& hub,
                ServerOptions options = {});
  ~ControlServer();

  /// Binds and starts serving; throws ServerError when the port is taken.
  void start();
  void stop();
  std::uint16_t port() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace roadrl
