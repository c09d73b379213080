#include "roadrl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

double draw(const Range& r, Rng& rng) { return round3(r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi)); }

VehicleProps draw_props(const VehicleSettings& s, Rng& rng) {
  VehicleProps p;
  p.mass = draw(s.mass, rng);
  p.f_max = draw(s.f_max, rng);
  p.eta = draw(s.eta, rng);
  p.tau = draw(s.tau, rng);
  p.length = draw(s.length, rng);
  p.validate();
  return p;
}

NodeId other_node(NodeId i, std::size_t n, Rng& rng) {
  auto j = static_cast<NodeId>(rng.uniform_index(n - 1));
  if (j >= i) ++j;
  return j;
}

/// Samples start (from `starts`) and goal until a path exists.
std::optional<Path> sample_route(const RoadGraph& g, std::span<const NodeId> starts, PathMode mode, Rng& rng) {
  const std::size_t n = g.node_count();
  for (std::size_t attempt = 0; attempt < 10 * n; ++attempt) {
    const NodeId i = starts[rng.uniform_index(starts.size())];
    const NodeId j = other_node(i, n, rng);
    if (auto p = dijkstra(g, i, j, mode)) return p;
  }
  return std::nullopt;
}

}  // namespace

void Ring::push(double x) {
  data_[head_] = x;
  head_ = (head_ + 1) % data_.size();
  size_ = std::min(size_ + 1, data_.size());
}

std::vector<double> Ring::values() const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = at(i);
  return out;
}

void StatRings::push(double action, double v, double a_long, double a_lat, double reward) {
  if (rewards_.size() == rewards_.capacity()) reward_sum_ -= rewards_.at(0);
  actions_.push(action);
  velocities_.push(v);
  a_long_.push(a_long);
  a_lat_.push(a_lat);
  rewards_.push(reward);
  reward_sum_ += reward;
  // Re-anchor the running sum once per window so rounding drift stays bounded.
  if (++pushes_ % rewards_.capacity() == 0) {
    reward_sum_ = 0.0;
    for (std::size_t i = 0; i < rewards_.size(); ++i) reward_sum_ += rewards_.at(i);
  }
  const double avg = window_average();
  min_ever_ = std::min(min_ever_, avg);
  max_ever_ = std::max(max_ever_, avg);
}

double StatRings::window_average() const {
  if (rewards_.empty()) throw Error(Errc::NoData, "no rewards recorded yet");
  return reward_sum_ / static_cast<double>(rewards_.size());
}

double color_fraction(const StatRings& rings) {
  const double avg = rings.window_average();
  const double span = rings.max_ever() - rings.min_ever();
  if (!(span > 0.0)) return 0.5;
  return std::clamp((avg - rings.min_ever()) / span, 0.0, 1.0);
}

std::vector<Vehicle> place_vehicles(const RoadGraph& g, const VehicleSettings& settings, PathMode mode,
                                    const ExplorationConfig& exploration, Rng& rng) {
  settings.validate();
  const std::size_t n = g.node_count();
  if (settings.count > n) {
    throw Error(Errc::TooManyVehicles, std::to_string(settings.count) + " vehicles for " + std::to_string(n) +
                                           " nodes");
  }
  if (n < 2) throw Error(Errc::PlacementFailed, "network needs at least two nodes");
  std::vector<NodeId> free(n);
  std::iota(free.begin(), free.end(), NodeId{0});
  std::vector<Vehicle> out;
  out.reserve(settings.count);
  for (std::size_t id = 0; id < settings.count; ++id) {
    Vehicle v;
    v.id = id;
    v.props = draw_props(settings, rng);
    auto path = sample_route(g, free, mode, rng);
    if (!path) throw Error(Errc::PlacementFailed, "no routable start/goal pair for vehicle " + std::to_string(id));
    free.erase(std::find(free.begin(), free.end(), path->nodes.front()));
    v.route = Route(g, std::move(*path));
    v.noise = ExplorationState(exploration);
    out.push_back(std::move(v));
  }
  return out;
}

StatSeries stat_series(const Vehicle& v) {
  StatSeries s;
  s.vehicle = v.id;
  s.actions = v.stats.actions().values();
  s.velocities = v.stats.velocities().values();
  s.a_long = v.stats.a_long().values();
  s.a_lat = v.stats.a_lat().values();
  s.rewards = v.stats.rewards().values();
  return s;
}

Simulation::Simulation(RoadGraph graph, SimConfig config)
    : graph_(std::move(graph)),
      config_((config.validate(), std::move(config))),
      agent_(config_.state_dim(), config_.ddpg, mix_seed(config_.seed, 1)),
      place_rng_(mix_seed(config_.seed, 2)),
      noise_rng_(mix_seed(config_.seed, 3)) {
  init();
}

Simulation::Simulation(RoadGraph graph, SimConfig config, const LoadedModel& model)
    : graph_(std::move(graph)),
      config_((config.validate(), std::move(config))),
      agent_(make_agent(model, config_.ddpg, mix_seed(config_.seed, 1))),
      place_rng_(mix_seed(config_.seed, 2)),
      noise_rng_(mix_seed(config_.seed, 3)) {
  if (agent_.state_dim() != config_.state_dim()) {
    throw Error(Errc::ShapeMismatch, "model expects " + std::to_string(agent_.state_dim()) +
                                         " state inputs, config provides " + std::to_string(config_.state_dim()));
  }
  init();
}

void Simulation::init() {
  if (!graph_.enhanced()) throw Error(Errc::NotEnhanced, "simulation needs an enhanced network");
  const auto& names = sensor_names();
  for (const auto& s : config_.state_sensors) {
    sensor_index_.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), s) - names.begin()));
  }
  vehicles_ = place_vehicles(graph_, config_.vehicles, config_.path_mode, config_.ddpg.exploration, place_rng_);
  refresh_sensors();
}

std::vector<double> Simulation::state_vector(const SensorReading& r) const {
  const auto all = r.values();
  std::vector<double> s(sensor_index_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = all[sensor_index_[i]] / config_.state_scale;
  return s;
}

void Simulation::post(ControlCommand cmd) {
  std::lock_guard lock(queue_mutex_);
  queue_.push_back(std::move(cmd));
}

void Simulation::drain_commands() {
  std::deque<ControlCommand> pending;
  {
    std::lock_guard lock(queue_mutex_);
    pending.swap(queue_);
  }
  for (auto& cmd : pending) apply(cmd);
}

void Simulation::set_flags(std::optional<bool> training, std::optional<bool> exploration) {
  if (training) agent_.set_training(*training);
  if (exploration) agent_.set_exploration(*exploration);
}

void Simulation::apply(ControlCommand& cmd) {
  std::visit(
      [this](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetFlags>) {
          set_flags(c.training, c.exploration);
        } else if constexpr (std::is_same_v<T, SaveModel>) {
          try {
            const auto paths = save_model(agent_, c.dir);
            if (c.done) c.done->set_value(paths);
          } catch (...) {
            if (c.done) c.done->set_exception(std::current_exception());
          }
        } else if constexpr (std::is_same_v<T, SelectVehicle>) {
          if (c.id < vehicles_.size()) selected_ = c.id;
        } else if constexpr (std::is_same_v<T, QueryStats>) {
          if (c.done) {
            c.done->set_value(c.id < vehicles_.size() ? std::optional(stat_series(vehicles_[c.id])) : std::nullopt);
          }
        } else if constexpr (std::is_same_v<T, Pause>) {
          paused_ = true;
        } else {
          paused_ = false;
        }
      },
      cmd);
}

void Simulation::assign_new_goal(Vehicle& v) {
  while (v.motion.p >= v.route.length()) {
    const NodeId here = v.route.goal();
    const NodeId starts[] = {here};
    auto path = sample_route(graph_, starts, config_.path_mode, place_rng_);
    if (path) {
      const double shift = v.route.length();
      v.route = Route(graph_, std::move(*path));
      v.motion.p -= shift;
      v.motion.p_prev -= shift;
      continue;
    }
    // Dead end: no goal is reachable from here, so restart at rest elsewhere.
    std::vector<NodeId> all(graph_.node_count());
    std::iota(all.begin(), all.end(), NodeId{0});
    path = sample_route(graph_, all, config_.path_mode, place_rng_);
    if (!path) throw Error(Errc::PlacementFailed, "vehicle " + std::to_string(v.id) + " cannot be re-placed");
    v.route = Route(graph_, std::move(*path));
    v.motion = MotionState{};
    v.prev_v = 0.0;
  }
}

void Simulation::refresh_sensors() {
  std::vector<VehicleView> views;
  views.reserve(vehicles_.size());
  for (const auto& v : vehicles_) {
    views.push_back(VehicleView{&v.route, v.motion.p, v.props.length, velocity(v.motion, config_.physics), v.prev_v});
  }
  const TrafficIndex traffic(graph_, views);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    vehicles_[i].sensors = read_sensors(i, views, traffic, config_.physics);
  }
}

TickResult Simulation::tick() {
  drain_commands();
  TickResult result;
  if (paused_) return result;

  const auto& k = config_.physics;
  std::vector<std::vector<double>> states(vehicles_.size());
  for (auto& v : vehicles_) {
    states[v.id] = state_vector(v.sensors);
    const double a = agent_.select_action(states[v.id], v.noise, noise_rng_);
    v.prev_v = velocity(v.motion, k);
    try {
      v.motion = step_motion(v.motion, a, v.props, k);
    } catch (const Error& e) {
      throw Error(e.code(), "vehicle " + std::to_string(v.id) + ": " + e.what());
    }
    v.last_action = a;
    if (v.motion.p >= v.route.length()) assign_new_goal(v);
  }

  refresh_sensors();

  for (auto& v : vehicles_) {
    const SensorReading& r = v.sensors;
    v.last_reward = reward_speed_limit(r.v, r.v_limit);
    agent_.observe(states[v.id], v.last_action, v.last_reward, state_vector(r));
    v.stats.push(v.last_action, r.v, r.a_long, r.a_lat, v.last_reward);
  }

  if (agent_.training_enabled()) {
    if (agent_.ready_to_train()) {
      result.update = agent_.train_step();
      result.trained = true;
    }
    agent_.advance_step();
  }
  ++tick_;
  return result;
}

SimSnapshot Simulation::snapshot() const {
  SimSnapshot s;
  s.tick = tick_;
  s.agent_steps = agent_.steps();
  s.training = agent_.training_enabled();
  s.exploration = agent_.exploration_enabled();
  s.paused = paused_;
  s.vehicles.reserve(vehicles_.size());
  for (const auto& v : vehicles_) {
    VehicleSnapshot vs;
    vs.id = v.id;
    vs.pos = v.route.position_at(v.motion.p);
    vs.heading_deg = v.route.heading_at(v.motion.p);
    vs.color_frac = v.stats.size() > 0 ? color_fraction(v.stats) : 0.5;
    vs.v = v.sensors.v;
    vs.v_limit = v.sensors.v_limit;
    s.vehicles.push_back(vs);
  }
  if (selected_) s.selected = stat_series(vehicles_[*selected_]);
  return s;
}

}  // namespace roadrl
