#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "roadrl/config.hpp"
#include "roadrl/model_io.hpp"
#include "roadrl/netgen.hpp"
#include "roadrl/osm.hpp"

namespace roadrl {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

struct GenNetOptions {
  NetGenSpec spec;
  std::filesystem::path out;
};

GenerationSummary cmd_gen_net(const GenNetOptions& options);

struct ImportOsmOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  std::optional<double> default_vmax;
  std::vector<double> vmax_choices;  // non-empty: overwrite every edge limit
  std::uint64_t seed = 1;            // drives vmax_choices
  std::vector<std::string> drivable;  // empty: default whitelist
};

OsmImport cmd_import_osm(const ImportOsmOptions& options);

struct TrainOptions {
  std::filesystem::path net;
  std::optional<std::filesystem::path> config;
  std::uint64_t steps = 0;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> actor, critic;  // resume from a saved model
};

struct MetricsRow {
  std::uint64_t step = 0;
  double avg_reward = 0.0;
  double epsilon = 0.0;
  std::optional<double> critic_loss;  // mean over updates since the previous row
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<ModelPaths> checkpoints;
  std::optional<ModelPaths> final_model;
  double seconds = 0.0;
};

/// Writes manifest.json before the first tick, metrics.csv every
/// log_interval steps and checkpoints every checkpoint_interval steps into
/// out_dir. `progress` is called after each metrics row.
TrainResult cmd_train(const TrainOptions& options,
                      const std::function<void(const MetricsRow&)>& progress = {});

struct EvalOptions {
  std::filesystem::path net;
  std::filesystem::path actor, critic;
  std::optional<std::filesystem::path> config;
  std::uint64_t steps = 1000;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;  // trace CSV
};

struct TraceRow {
  std::uint64_t step = 0;
  std::size_t vehicle = 0;
  double action = 0.0;
  double v = 0.0;
  double v_limit = 0.0;
  double reward = 0.0;
};

struct EvalResult {
  std::vector<TraceRow> trace;
  double mean_reward = 0.0;
};

/// Runs with training and exploration off and writes the per-step trace.
EvalResult cmd_eval(const EvalOptions& options);

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
std::string trace_header();
std::string format_trace_row(const TraceRow& row);

}  // namespace roadrl
