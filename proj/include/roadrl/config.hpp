#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadrl/ddpg.hpp"
#include "roadrl/dynamics.hpp"
#include "roadrl/routing.hpp"

namespace roadrl {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

struct VehicleSettings {
  std::size_t count = 1;
  Range mass{900.0, 1600.0};
  Range f_max{3000.0, 8000.0};
  Range eta{30.0, 70.0};
  Range tau{0.8, 1.2};
  Range length{3.5, 5.0};

  /// Throws ConfigError for lo > hi or ranges that allow invalid properties.
  void validate() const;
};

struct RunSettings {
  double tick_rate = 0.0;               // ticks per second when serving, 0 = unthrottled
  std::uint64_t snapshot_every = 10;    // ticks between published snapshots
  std::uint64_t log_interval = 100;     // steps between metrics rows
  std::uint64_t checkpoint_interval = 10'000;
};

/// Sensor names accepted in SimConfig::state_sensors.
const std::vector<std::string>& sensor_names();

struct SimConfig {
  std::uint64_t seed = 1;
  PathMode path_mode = PathMode::Shortest;
  std::vector<std::string> state_sensors{"v", "v_limit"};
  double state_scale = 10.0;
  PhysConstants physics;
  VehicleSettings vehicles;
  DdpgConfig ddpg;
  RunSettings run;

  int state_dim() const { return static_cast<int>(state_sensors.size()); }
  void validate() const;
};

nlohmann::json config_to_json(const SimConfig& c);

/// Missing keys keep their defaults; unknown keys and bad values throw
/// ConfigError.
SimConfig config_from_json(const nlohmann::json& j);

/// JSON text, or "key = value" lines with dotted keys (e.g.
/// "ddpg.actor_lr = 5e-5"); values are read as JSON where possible and as
/// plain strings otherwise. '#' starts a comment line.
SimConfig parse_config(std::string_view text);
SimConfig load_config(const std::filesystem::path& path);

}  // namespace roadrl
