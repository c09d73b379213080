#include "roadrl/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "roadrl/error.hpp"
#include "roadrl/network_io.hpp"
#include "roadrl/sim.hpp"

namespace roadrl {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string utc_now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

SimConfig resolve_config(const std::optional<std::filesystem::path>& path, std::optional<std::uint64_t> seed) {
  SimConfig c = path ? load_config(*path) : SimConfig{};
  if (seed) c.seed = *seed;
  c.validate();
  return c;
}

double mean_window_reward(const Simulation& sim) {
  double sum = 0.0;
  for (const auto& v : sim.vehicles()) sum += v.stats.window_average();
  return sum / static_cast<double>(sim.vehicles().size());
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::IoError, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

GenerationSummary cmd_gen_net(const GenNetOptions& options) {
  const auto net = generate_network(options.spec);
  save_network(net.graph, options.out);
  return net.summary;
}

OsmImport cmd_import_osm(const ImportOsmOptions& options) {
  OsmImportOptions o;
  if (!options.drivable.empty()) o.drivable_types = options.drivable;
  if (options.default_vmax) {
    if (!(*options.default_vmax > 0.0)) throw Error(Errc::InvalidDefault, "default speed limit must be positive");
    o.enhance.default_speed_limit = *options.default_vmax;
  }
  auto result = import_osm_file(options.in, o);
  if (!options.vmax_choices.empty()) {
    Rng rng(mix_seed(options.seed, 4));
    result.graph = randomize_speed_limits(std::move(result.graph), options.vmax_choices, rng);
  }
  save_network(result.graph, options.out);
  return result;
}

std::string metrics_header() { return "step,avg_reward,epsilon,critic_loss"; }

std::string format_metrics_row(const MetricsRow& row) {
  return std::to_string(row.step) + "," + fmt(row.avg_reward) + "," + fmt(row.epsilon) + "," +
         (row.critic_loss ? fmt(*row.critic_loss) : std::string());
}

std::string trace_header() { return "step,vehicle,action,v,v_limit,reward"; }

std::string format_trace_row(const TraceRow& row) {
  return std::to_string(row.step) + "," + std::to_string(row.vehicle) + "," + fmt(row.action) + "," + fmt(row.v) +
         "," + fmt(row.v_limit) + "," + fmt(row.reward);
}

TrainResult cmd_train(const TrainOptions& options, const std::function<void(const MetricsRow&)>& progress) {
  if (options.actor.has_value() != options.critic.has_value()) {
    throw Error(Errc::ConfigError, "--actor and --critic must be given together");
  }
  const SimConfig config = resolve_config(options.config, options.seed);
  const std::string net_bytes = read_file_bytes(options.net);
  RoadGraph graph = decode_network(net_bytes);

  std::optional<Simulation> sim;
  if (options.actor) {
    const auto model = load_model(*options.actor, *options.critic);
    if (model.actor.input_size() != config.state_dim()) {
      throw Error(Errc::ConfigError, "model takes " + std::to_string(model.actor.input_size()) +
                                         " state inputs, config has " + std::to_string(config.state_dim()) +
                                         " sensors");
    }
    sim.emplace(std::move(graph), config, model);
  } else {
    sim.emplace(std::move(graph), config);
  }

  std::filesystem::create_directories(options.out_dir);
  nlohmann::json manifest;
  manifest["config"] = config_to_json(config);
  manifest["seed"] = config.seed;
  manifest["network"] = {{"path", std::filesystem::absolute(options.net).string()},
                         {"sha256", sha256_hex(net_bytes)}};
  if (options.actor) {
    manifest["resume"] = {{"actor", std::filesystem::absolute(*options.actor).string()},
                          {"critic", std::filesystem::absolute(*options.critic).string()}};
  }
  manifest["start_time"] = utc_now_iso();
  manifest["steps"] = options.steps;
  manifest["out_dir"] = std::filesystem::absolute(options.out_dir).string();
  {
    auto out = open_out(options.out_dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  auto metrics = open_out(options.out_dir / "metrics.csv");
  metrics << metrics_header() << '\n';
  const ExplorationState schedule(config.ddpg.exploration);
  double loss_sum = 0.0;
  std::uint64_t loss_count = 0;
  for (std::uint64_t step = 1; step <= options.steps; ++step) {
    const auto tick = sim->tick();
    if (tick.trained) {
      loss_sum += tick.update.critic_loss;
      ++loss_count;
    }
    if (step % config.run.log_interval == 0) {
      MetricsRow row{step, mean_window_reward(*sim), schedule.epsilon_at(sim->agent().steps()), std::nullopt};
      if (loss_count > 0) row.critic_loss = loss_sum / static_cast<double>(loss_count);
      loss_sum = 0.0;
      loss_count = 0;
      metrics << format_metrics_row(row) << '\n';
      metrics.flush();
      result.metrics.push_back(row);
      if (progress) progress(row);
    }
    if (step % config.run.checkpoint_interval == 0) {
      result.checkpoints.push_back(save_model(sim->agent(), options.out_dir / "checkpoints"));
    }
  }
  if (options.steps > 0) result.final_model = save_model(sim->agent(), options.out_dir / "final");
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

EvalResult cmd_eval(const EvalOptions& options) {
  const SimConfig config = resolve_config(options.config, options.seed);
  const auto model = load_model(options.actor, options.critic);
  Simulation sim(load_network(options.net), config, model);
  sim.set_flags(false, false);

  EvalResult result;
  auto out = open_out(options.out);
  out << trace_header() << '\n';
  double sum = 0.0;
  for (std::uint64_t step = 1; step <= options.steps; ++step) {
    sim.tick();
    for (const auto& v : sim.vehicles()) {
      const TraceRow row{step, v.id, v.last_action, v.sensors.v, v.sensors.v_limit, v.last_reward};
      out << format_trace_row(row) << '\n';
      sum += row.reward;
      result.trace.push_back(row);
    }
  }
  if (!result.trace.empty()) result.mean_reward = sum / static_cast<double>(result.trace.size());
  if (!out) throw Error(Errc::IoError, "failed writing " + options.out.string());
  return result;
}

}  // namespace roadrl
