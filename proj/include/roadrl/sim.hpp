#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "roadrl/config.hpp"
#include "roadrl/ddpg.hpp"
#include "roadrl/dynamics.hpp"
#include "roadrl/model_io.hpp"
#include "roadrl/routing.hpp"

namespace roadrl {

inline constexpr std::size_t kStatWindow = 1000;

/// Fixed-capacity ring of the most recent values, oldest first on export.
class Ring {
 public:
  explicit Ring(std::size_t capacity = kStatWindow) : data_(capacity) {}

  void push(double x);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  bool empty() const { return size_ == 0; }
  /// i-th oldest value.
  double at(std::size_t i) const { return data_[(head_ + data_.size() - size_ + i) % data_.size()]; }
  std::vector<double> values() const;

 private:
  std::vector<double> data_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

/// Per-vehicle statistics over the last kStatWindow ticks.
class StatRings {
 public:
  explicit StatRings(std::size_t capacity = kStatWindow)
      : actions_(capacity), velocities_(capacity), a_long_(capacity), a_lat_(capacity), rewards_(capacity) {}

  void push(double action, double v, double a_long, double a_lat, double reward);

  const Ring& actions() const { return actions_; }
  const Ring& velocities() const { return velocities_; }
  const Ring& a_long() const { return a_long_; }
  const Ring& a_lat() const { return a_lat_; }
  const Ring& rewards() const { return rewards_; }

  std::size_t size() const { return rewards_.size(); }

  /// Incrementally maintained mean of the reward ring; throws NoData.
  double window_average() const;
  double min_ever() const { return min_ever_; }
  double max_ever() const { return max_ever_; }

 private:
  Ring actions_, velocities_, a_long_, a_lat_, rewards_;
  double reward_sum_ = 0.0;
  std::size_t pushes_ = 0;
  double min_ever_ = std::numeric_limits<double>::infinity();
  double max_ever_ = -std::numeric_limits<double>::infinity();
};

/// Position of the window average between the lowest and highest window
/// average ever seen; 0.5 while those coincide. Throws NoData when empty.
double color_fraction(const StatRings& rings);

struct Vehicle {
  std::size_t id = 0;
  VehicleProps props;
  Route route;
  MotionState motion;  // positions along route
  double prev_v = 0.0;
  double last_action = 0.0;
  double last_reward = 0.0;
  SensorReading sensors;
  ExplorationState noise;
  StatRings stats;

  double s() const { return motion.p; }
};

/// Draws per-vehicle properties and start/goal pairs. Properties are
/// uniform in [lo, hi] rounded to three decimals; starts are distinct.
/// Throws TooManyVehicles or PlacementFailed.
std::vector<Vehicle> place_vehicles(const RoadGraph& g, const VehicleSettings& settings, PathMode mode,
                                    const ExplorationConfig& exploration, Rng& rng);

struct SetFlags {
  std::optional<bool> training;
  std::optional<bool> exploration;
};
struct SaveModel {
  std::filesystem::path dir;
  std::shared_ptr<std::promise<ModelPaths>> done;
};
struct SelectVehicle {
  std::size_t id = 0;
};
struct Pause {};
struct Resume {};

struct StatSeries;

/// Read-only request answered between ticks; nullopt for an unknown id.
struct QueryStats {
  std::size_t id = 0;
  std::shared_ptr<std::promise<std::optional<StatSeries>>> done;
};

using ControlCommand = std::variant<SetFlags, SaveModel, SelectVehicle, Pause, Resume, QueryStats>;

struct VehicleSnapshot {
  std::size_t id = 0;
  GeoPoint pos;
  double heading_deg = 0.0;
  double color_frac = 0.5;
  double v = 0.0;
  double v_limit = 0.0;
};

struct StatSeries {
  std::size_t vehicle = 0;
  std::vector<double> actions, velocities, a_long, a_lat, rewards;
};

struct SimSnapshot {
  std::uint64_t tick = 0;
  std::uint64_t agent_steps = 0;
  bool training = true;
  bool exploration = true;
  bool paused = false;
  std::vector<VehicleSnapshot> vehicles;
  std::optional<StatSeries> selected;
};

StatSeries stat_series(const Vehicle& v);

struct TickResult {
  bool trained = false;
  UpdateResult update;
};

/// Owns the road network, vehicles, and the shared agent. All mutation
/// happens on the thread calling tick(); other threads talk to it through
/// post().
class Simulation {
 public:
  Simulation(RoadGraph graph, SimConfig config);
  /// Starts from a saved model. Throws ShapeMismatch when the actor input
  /// does not match the configured state size.
  Simulation(RoadGraph graph, SimConfig config, const LoadedModel& model);

  /// Drains the command queue, then advances every vehicle by one step
  /// unless paused.
  TickResult tick();

  /// Thread-safe; the command takes effect at the start of the next tick.
  void post(ControlCommand cmd);

  /// Applies queued commands without advancing time.
  void drain_commands();

  SimSnapshot snapshot() const;

  const RoadGraph& graph() const { return graph_; }
  const SimConfig& config() const { return config_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const DdpgAgent& agent() const { return agent_; }
  DdpgAgent& agent() { return agent_; }
  std::uint64_t ticks() const { return tick_; }
  bool paused() const { return paused_; }
  std::optional<std::size_t> selected() const { return selected_; }

  /// Scaled state vector from a sensor reading.
  std::vector<double> state_vector(const SensorReading& r) const;

  /// Directly applies flags (same semantics as a SetFlags command).
  void set_flags(std::optional<bool> training, std::optional<bool> exploration);

 private:
  void init();
  void apply(ControlCommand& cmd);
  void assign_new_goal(Vehicle& v);
  void refresh_sensors();

  RoadGraph graph_;
  SimConfig config_;
  DdpgAgent agent_;
  Rng place_rng_;
  Rng noise_rng_;
  std::vector<Vehicle> vehicles_;
  std::vector<std::size_t> sensor_index_;
  std::uint64_t tick_ = 0;
  bool paused_ = false;
  std::optional<std::size_t> selected_;

  std::mutex queue_mutex_;
  std::deque<ControlCommand> queue_;
};

}  // namespace roadrl
