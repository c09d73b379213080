#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "roadrl/commands.hpp"
#include "roadrl/error.hpp"
#include "roadrl/network_io.hpp"
#include "roadrl/server.hpp"
#include "roadrl/wire.hpp"

using namespace roadrl;

namespace {

constexpr int kUsage = 2;
constexpr int kFailure = 1;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int run_route(const std::filesystem::path& net, NodeId from, NodeId to, const std::string& mode_name) {
  const RoadGraph g = load_network(net);
  if (from >= g.node_count() || to >= g.node_count()) {
    throw UsageError("node id out of range (network has " + std::to_string(g.node_count()) + " nodes)");
  }
  const PathMode mode = path_mode_from_name(mode_name);
  const auto path = dijkstra(g, from, to, mode);
  if (!path) {
    std::cerr << "no route from " << from << " to " << to << '\n';
    return kFailure;
  }
  std::cout << "nodes";
  for (NodeId n : path->nodes) std::cout << ' ' << n;
  std::cout << "\ncost " << path->total_cost << (mode == PathMode::Shortest ? " m" : " s") << '\n';
  return 0;
}

int run_info(const std::filesystem::path& net) {
  const RoadGraph g = load_network(net);
  double length = 0.0;
  for (const auto& e : g.edges()) length += e.gcd.value_or(0.0);
  std::cout << "nodes=" << g.node_count() << '\n'
            << "edges=" << g.edge_count() << '\n'
            << "curves=" << g.curves().size() << '\n'
            << "components=" << count_wcc(g) << '\n'
            << "edge_length_m=" << length << '\n';
  return 0;
}

struct ServeArgs {
  std::filesystem::path net;
  std::optional<std::filesystem::path> config, actor, critic;
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  std::filesystem::path model_dir = "models";
  std::uint64_t max_ticks = 0;
};

int run_serve(const ServeArgs& a) {
  if (a.actor.has_value() != a.critic.has_value()) throw UsageError("--actor and --critic must be given together");
  SimConfig config = a.config ? load_config(*a.config) : SimConfig{};
  RoadGraph graph = load_network(a.net);
  std::optional<Simulation> sim;
  if (a.actor) {
    sim.emplace(std::move(graph), config, load_model(*a.actor, *a.critic));
  } else {
    sim.emplace(std::move(graph), config);
  }
  SnapshotHub hub;
  ServerOptions options;
  options.address = a.address;
  options.port = a.port;
  options.model_dir = a.model_dir;
  ControlServer server(network_to_wire(sim->graph()).dump(), sim->vehicles().size(),
                       [&](ControlCommand cmd) { sim->post(std::move(cmd)); }, hub, options);
  server.start();
  SimulationRunner runner(*sim, hub);
  runner.start(a.max_ticks);
  std::cout << "listening on http://" << a.address << ':' << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  runner.stop();
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Road network driving simulator with a DDPG speed controller"};
  app.require_subcommand(1);

  double height = 0, width = 0, density = 100;
  std::size_t nodes = 0;
  std::uint64_t seed = 1;
  std::filesystem::path out;
  auto* gen = app.add_subcommand("gen-net", "Generate an artificial road network");
  gen->add_option("--height", height, "Map height in metres")->required();
  gen->add_option("--width", width, "Map width in metres")->required();
  gen->add_option("--nodes", nodes, "Number of nodes")->required();
  gen->add_option("--density", density, "Percentage of triangulated roads kept, in (0, 100]");
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out, "Output network file")->required();

  ImportOsmOptions imp;
  double default_vmax = 0;
  auto* osm = app.add_subcommand("import-osm", "Import an OpenStreetMap XML file");
  osm->add_option("--in", imp.in, "OSM XML input")->required()->check(CLI::ExistingFile);
  osm->add_option("--out", imp.out, "Output network file")->required();
  auto* dv = osm->add_option("--default-vmax", default_vmax, "Speed limit in m/s for ways without maxspeed");
  osm->add_option("--vmax-choices", imp.vmax_choices, "Overwrite every edge limit with a uniform draw")
      ->delimiter(',');
  osm->add_option("--seed", imp.seed, "Seed for --vmax-choices");
  osm->add_option("--drivable", imp.drivable, "Highway types to keep (replaces the default list)")->delimiter(',');

  std::filesystem::path net;
  NodeId from = 0, to = 0;
  std::string mode = "shortest";
  auto* route = app.add_subcommand("route", "Print the best route between two nodes");
  route->add_option("--net", net, "Network file")->required()->check(CLI::ExistingFile);
  route->add_option("--from", from, "Start node id")->required();
  route->add_option("--to", to, "Goal node id")->required();
  route->add_option("--mode", mode, "shortest or fastest")->check(CLI::IsMember({"shortest", "fastest"}));

  auto* info = app.add_subcommand("info", "Summarize a network file");
  info->add_option("--net", net, "Network file")->required()->check(CLI::ExistingFile);

  TrainOptions train;
  std::filesystem::path train_config, actor, critic;
  std::uint64_t run_seed = 0;
  auto* tr = app.add_subcommand("train", "Headless training run");
  tr->add_option("--net", train.net, "Network file")->required()->check(CLI::ExistingFile);
  auto* tr_cfg = tr->add_option("--config", train_config, "Run config file")->check(CLI::ExistingFile);
  tr->add_option("--steps", train.steps, "Number of ticks")->required();
  tr->add_option("--out-dir", train.out_dir, "Output directory")->required();
  auto* tr_seed = tr->add_option("--seed", run_seed, "Overrides the config seed");
  auto* tr_actor = tr->add_option("--actor", actor, "Resume from this actor file")->check(CLI::ExistingFile);
  auto* tr_critic = tr->add_option("--critic", critic, "Resume from this critic file")->check(CLI::ExistingFile);
  tr_actor->needs(tr_critic);
  tr_critic->needs(tr_actor);
  bool quiet = false;
  tr->add_flag("--quiet", quiet, "Do not print metrics rows");

  EvalOptions ev;
  std::filesystem::path eval_config;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model without training or exploration");
  eval->add_option("--net", ev.net, "Network file")->required()->check(CLI::ExistingFile);
  eval->add_option("--actor", ev.actor, "Actor .acnet file")->required()->check(CLI::ExistingFile);
  eval->add_option("--critic", ev.critic, "Critic .acnet file")->required()->check(CLI::ExistingFile);
  auto* ev_cfg = eval->add_option("--config", eval_config, "Run config file")->check(CLI::ExistingFile);
  eval->add_option("--steps", ev.steps, "Number of ticks");
  auto* ev_seed = eval->add_option("--seed", run_seed, "Overrides the config seed");
  eval->add_option("--out", ev.out, "Trace CSV")->default_val("trace.csv");

  ServeArgs sv;
  std::filesystem::path serve_config, serve_actor, serve_critic;
  auto* serve = app.add_subcommand("serve", "Run the simulation behind the control server");
  serve->add_option("--net", sv.net, "Network file")->required()->check(CLI::ExistingFile);
  auto* sv_cfg = serve->add_option("--config", serve_config, "Run config file")->check(CLI::ExistingFile);
  auto* sv_actor = serve->add_option("--actor", serve_actor, "Start from this actor")->check(CLI::ExistingFile);
  auto* sv_critic = serve->add_option("--critic", serve_critic, "Start from this critic")->check(CLI::ExistingFile);
  sv_actor->needs(sv_critic);
  sv_critic->needs(sv_actor);
  serve->add_option("--address", sv.address, "Bind address");
  serve->add_option("--port", sv.port, "Port, 0 picks a free one");
  serve->add_option("--model-dir", sv.model_dir, "Directory for POST /api/save");
  serve->add_option("--max-ticks", sv.max_ticks, "Stop ticking after this many ticks, 0 = never");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) {
      NetGenSpec spec;
      try {
        spec = NetGenSpec::make(height, width, nodes, density, seed);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const auto s = cmd_gen_net({spec, out});
      std::cout << "nodes=" << s.nodes << " edges=" << s.directed_edges << " density=" << s.realized_density_pct
                << "%\n";
    } else if (*osm) {
      if (*dv) imp.default_vmax = default_vmax;
      const auto r = cmd_import_osm(imp);
      std::cout << format_report(r.report) << "nodes=" << r.graph.node_count()
                << "\nedges=" << r.graph.edge_count() << '\n';
    } else if (*route) {
      return run_route(net, from, to, mode);
    } else if (*info) {
      return run_info(net);
    } else if (*tr) {
      if (*tr_cfg) train.config = train_config;
      if (*tr_seed) train.seed = run_seed;
      if (*tr_actor) {
        train.actor = actor;
        train.critic = critic;
      }
      const auto r = cmd_train(train, [&](const MetricsRow& row) {
        if (!quiet) std::cout << format_metrics_row(row) << '\n';
      });
      std::cout << "steps=" << train.steps << " checkpoints=" << r.checkpoints.size() << " seconds=" << r.seconds
                << '\n';
      if (r.final_model) std::cout << "actor=" << r.final_model->actor.string() << "\ncritic="
                                   << r.final_model->critic.string() << '\n';
    } else if (*eval) {
      if (*ev_cfg) ev.config = eval_config;
      if (*ev_seed) ev.seed = run_seed;
      const auto r = cmd_eval(ev);
      std::cout << "rows=" << r.trace.size() << " mean_reward=" << r.mean_reward << '\n';
    } else if (*serve) {
      if (*sv_cfg) sv.config = serve_config;
      if (*sv_actor) {
        sv.actor = serve_actor;
        sv.critic = serve_critic;
      }
      return run_serve(sv);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return 0;
}
