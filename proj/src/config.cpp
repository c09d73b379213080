#include "roadrl/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "roadrl/error.hpp"
#include "roadrl/network_io.hpp"

namespace roadrl {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::ConfigError, what); }

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(std::string(section) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      bad(std::string("unknown key '") + section + (section[0] ? "." : "") + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    bad(std::string("bad value for '") + key + "': " + it->dump());
  }
}

void read_range(const json& j, const char* key, Range& r) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_number()) {
    r.lo = r.hi = it->get<double>();
    return;
  }
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    bad(std::string("range '") + key + "' must be [lo, hi]");
  }
  r = Range{(*it)[0].get<double>(), (*it)[1].get<double>()};
}

void check_range(const Range& r, const char* name, bool allow_zero) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) bad(std::string("range ") + name + " needs lo <= hi");
  if (allow_zero ? r.lo < 0.0 : r.lo <= 0.0) bad(std::string("range ") + name + " out of bounds");
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

json set_dotted(json root, const std::string& key, json value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) bad("malformed key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return root;
    }
    node = &(*node)[part];
    if (!node->is_object() && !node->is_null()) bad("key '" + key + "' conflicts with a scalar");
    start = dot + 1;
  }
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& sensor_names() {
  static const std::vector<std::string> names{"v",
                                              "v_limit",
                                              "a_long",
                                              "a_lat",
                                              "d_next_curve",
                                              "r_next_curve",
                                              "d_curve_next_intersection",
                                              "d_next_vehicle_same_path",
                                              "d_next_vehicle_next_intersection"};
  return names;
}

void VehicleSettings::validate() const {
  if (count < 1) bad("vehicle count must be at least 1");
  check_range(mass, "mass", false);
  check_range(f_max, "f_max", false);
  check_range(eta, "eta", true);
  check_range(tau, "tau", false);
  check_range(length, "length", false);
}

void SimConfig::validate() const {
  physics.validate();
  vehicles.validate();
  if (state_sensors.empty()) bad("state_sensors must not be empty");
  std::set<std::string> seen;
  for (const auto& s : state_sensors) {
    const auto& names = sensor_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) bad("unknown sensor '" + s + "'");
    if (!seen.insert(s).second) bad("sensor '" + s + "' listed twice");
  }
  if (!(state_scale > 0.0) || !std::isfinite(state_scale)) bad("state_scale must be positive");
  if (ddpg.hidden.empty() || std::any_of(ddpg.hidden.begin(), ddpg.hidden.end(), [](int h) { return h < 1; })) {
    bad("ddpg.hidden needs positive layer sizes");
  }
  if (!(ddpg.actor_lr > 0.0) || !(ddpg.critic_lr > 0.0)) bad("learning rates must be positive");
  if (!(ddpg.target_rate > 0.0 && ddpg.target_rate <= 1.0)) bad("ddpg.target_rate must be in (0, 1]");
  if (!(ddpg.gamma >= 0.0 && ddpg.gamma <= 1.0)) bad("ddpg.gamma must be in [0, 1]");
  if (ddpg.batch_size < 1 || ddpg.buffer_capacity < ddpg.batch_size) bad("ddpg buffer must hold a batch");
  if (!(ddpg.leaky_slope >= 0.0) || !(ddpg.weight_init_std >= 0.0)) bad("ddpg init parameters out of range");
  if (!(ddpg.exploration.sigma >= 0.0)) bad("exploration sigma must be non-negative");
  if (run.snapshot_every < 1 || run.log_interval < 1 || run.checkpoint_interval < 1) {
    bad("run intervals must be at least 1");
  }
  if (!(run.tick_rate >= 0.0)) bad("run.tick_rate must be non-negative");
}

json config_to_json(const SimConfig& c) {
  const auto& d = c.ddpg;
  const auto& x = d.exploration;
  return json{
      {"seed", c.seed},
      {"path_mode", path_mode_name(c.path_mode)},
      {"state_sensors", c.state_sensors},
      {"state_scale", c.state_scale},
      {"physics", {{"T", c.physics.T}, {"g0", c.physics.g0}, {"kappa", c.physics.kappa}}},
      {"vehicles",
       {{"count", c.vehicles.count},
        {"mass", range_json(c.vehicles.mass)},
        {"f_max", range_json(c.vehicles.f_max)},
        {"eta", range_json(c.vehicles.eta)},
        {"tau", range_json(c.vehicles.tau)},
        {"length", range_json(c.vehicles.length)}}},
      {"ddpg",
       {{"hidden", d.hidden},
        {"leaky_slope", d.leaky_slope},
        {"weight_init_std", d.weight_init_std},
        {"actor_lr", d.actor_lr},
        {"critic_lr", d.critic_lr},
        {"target_rate", d.target_rate},
        {"gamma", d.gamma},
        {"batch_size", d.batch_size},
        {"buffer_capacity", d.buffer_capacity},
        {"warmup_steps", d.warmup_steps},
        {"exploration",
         {{"ar1", x.ar1},
          {"ar2", x.ar2},
          {"sigma", x.sigma},
          {"epsilon_init", x.epsilon_init},
          {"epsilon_decay", x.epsilon_decay},
          {"decay_start", x.decay_start}}}}},
      {"run",
       {{"tick_rate", c.run.tick_rate},
        {"snapshot_every", c.run.snapshot_every},
        {"log_interval", c.run.log_interval},
        {"checkpoint_interval", c.run.checkpoint_interval}}},
  };
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  check_keys(j, "", {"seed", "path_mode", "state_sensors", "state_scale", "physics", "vehicles", "ddpg", "run"});
  read(j, "seed", c.seed);
  if (const auto it = j.find("path_mode"); it != j.end()) {
    if (!it->is_string()) bad("path_mode must be a string");
    c.path_mode = path_mode_from_name(it->get<std::string>());
  }
  read(j, "state_sensors", c.state_sensors);
  read(j, "state_scale", c.state_scale);
  if (const auto it = j.find("physics"); it != j.end()) {
    check_keys(*it, "physics", {"T", "g0", "kappa"});
    read(*it, "T", c.physics.T);
    read(*it, "g0", c.physics.g0);
    read(*it, "kappa", c.physics.kappa);
  }
  if (const auto it = j.find("vehicles"); it != j.end()) {
    check_keys(*it, "vehicles", {"count", "mass", "f_max", "eta", "tau", "length"});
    read(*it, "count", c.vehicles.count);
    read_range(*it, "mass", c.vehicles.mass);
    read_range(*it, "f_max", c.vehicles.f_max);
    read_range(*it, "eta", c.vehicles.eta);
    read_range(*it, "tau", c.vehicles.tau);
    read_range(*it, "length", c.vehicles.length);
  }
  if (const auto it = j.find("ddpg"); it != j.end()) {
    auto& d = c.ddpg;
    check_keys(*it, "ddpg",
               {"hidden", "leaky_slope", "weight_init_std", "actor_lr", "critic_lr", "target_rate", "gamma",
                "batch_size", "buffer_capacity", "warmup_steps", "exploration"});
    read(*it, "hidden", d.hidden);
    read(*it, "leaky_slope", d.leaky_slope);
    read(*it, "weight_init_std", d.weight_init_std);
    read(*it, "actor_lr", d.actor_lr);
    read(*it, "critic_lr", d.critic_lr);
    read(*it, "target_rate", d.target_rate);
    read(*it, "gamma", d.gamma);
    read(*it, "batch_size", d.batch_size);
    read(*it, "buffer_capacity", d.buffer_capacity);
    read(*it, "warmup_steps", d.warmup_steps);
    if (const auto ex = it->find("exploration"); ex != it->end()) {
      auto& x = d.exploration;
      check_keys(*ex, "ddpg.exploration", {"ar1", "ar2", "sigma", "epsilon_init", "epsilon_decay", "decay_start"});
      read(*ex, "ar1", x.ar1);
      read(*ex, "ar2", x.ar2);
      read(*ex, "sigma", x.sigma);
      read(*ex, "epsilon_init", x.epsilon_init);
      read(*ex, "epsilon_decay", x.epsilon_decay);
      read(*ex, "decay_start", x.decay_start);
    }
  }
  if (const auto it = j.find("run"); it != j.end()) {
    check_keys(*it, "run", {"tick_rate", "snapshot_every", "log_interval", "checkpoint_interval"});
    read(*it, "tick_rate", c.run.tick_rate);
    read(*it, "snapshot_every", c.run.snapshot_every);
    read(*it, "log_interval", c.run.log_interval);
    read(*it, "checkpoint_interval", c.run.checkpoint_interval);
  }
  c.validate();
  return c;
}

SimConfig parse_config(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      bad(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
  }
  json root = json::object();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    root = set_dotted(std::move(root), key, std::move(value));
  }
  return config_from_json(root);
}

SimConfig load_config(const std::filesystem::path& path) { return parse_config(read_file_bytes(path)); }

}  // namespace roadrl
