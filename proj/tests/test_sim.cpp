#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "roadrl/config.hpp"
#include "roadrl/error.hpp"
#include "roadrl/netgen.hpp"
#include "roadrl/osm.hpp"
#include "roadrl/sim.hpp"
#include "roadrl/wire.hpp"

using namespace roadrl;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<Errc>(-1);
}

const RoadGraph& straight_road() {
  static const RoadGraph g =
      import_osm_file(std::filesystem::path(ROADRL_TEST_DATA) / "osm" / "straight_road.osm").graph;
  return g;
}

RoadGraph small_net(std::uint64_t seed) {
  return generate_network(NetGenSpec::make(600, 600, 12, 80, seed)).graph;
}

SimConfig small_config(std::size_t vehicles = 1) {
  SimConfig c;
  c.vehicles.count = vehicles;
  c.ddpg.hidden = {16, 12};
  c.ddpg.warmup_steps = 64;
  c.ddpg.buffer_capacity = 256;
  c.ddpg.batch_size = 8;
  return c;
}

}  // namespace

TEST(StatRings, KeepLastThousand) {
  StatRings r;
  for (int i = 0; i < 1500; ++i) r.push(i, i, i, i, -i / 1500.0);
  EXPECT_EQ(r.size(), 1000u);
  EXPECT_EQ(r.actions().at(0), 500.0);
  EXPECT_EQ(r.actions().at(999), 1499.0);
  const auto v = r.velocities().values();
  ASSERT_EQ(v.size(), 1000u);
  EXPECT_EQ(v.front(), 500.0);
  EXPECT_EQ(v.back(), 1499.0);
}

TEST(StatRings, IncrementalAverageMatchesRecompute) {
  Rng rng(8);
  StatRings r;
  double worst = 0.0;
  for (int i = 0; i < 200'000; ++i) {
    r.push(0, 0, 0, 0, rng.uniform(-1, 0));
    if (i % 97 == 0) {
      double sum = 0.0;
      for (std::size_t k = 0; k < r.rewards().size(); ++k) sum += r.rewards().at(k);
      worst = std::max(worst, std::abs(sum / r.rewards().size() - r.window_average()));
      EXPECT_LE(r.min_ever(), r.max_ever());
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(StatRings, ColorFraction) {
  StatRings r;
  EXPECT_EQ(code_of([&] { color_fraction(r); }), Errc::NoData);
  r.push(0, 0, 0, 0, -0.5);
  EXPECT_EQ(color_fraction(r), 0.5);
  r.push(0, 0, 0, 0, 0.0);  // average rises to a new maximum
  EXPECT_EQ(color_fraction(r), 1.0);
  r.push(0, 0, 0, 0, -1.0);  // average -0.5, the minimum so far
  EXPECT_EQ(color_fraction(r), 0.0);
  r.push(0, 0, 0, 0, -0.1);  // -0.4 between -0.5 and -0.25
  EXPECT_NEAR(color_fraction(r), 0.4, 1e-12);
}

TEST(Placement, EveryNodeHostsOneStart) {
  const RoadGraph g = small_net(3);
  VehicleSettings s;
  s.count = g.node_count();
  Rng rng(4);
  const auto vs = place_vehicles(g, s, PathMode::Shortest, {}, rng);
  std::set<NodeId> starts;
  for (const auto& v : vs) {
    starts.insert(v.route.start());
    EXPECT_NE(v.route.start(), v.route.goal());
    EXPECT_EQ(v.motion, MotionState{});
  }
  EXPECT_EQ(starts.size(), g.node_count());
  for (std::size_t i = 0; i < vs.size(); ++i) EXPECT_EQ(vs[i].id, i);
}

TEST(Placement, PropertiesRoundedAndFixedRanges) {
  const RoadGraph g = small_net(5);
  VehicleSettings s;
  s.count = 6;
  s.mass = {1234.5678, 1234.5678};
  s.tau = {0.8, 1.2};
  Rng rng(1);
  const auto vs = place_vehicles(g, s, PathMode::Fastest, {}, rng);
  for (const auto& v : vs) {
    EXPECT_EQ(v.props.mass, vs[0].props.mass);
    EXPECT_EQ(v.props.mass, 1234.568);
    EXPECT_GE(v.props.tau, 0.8);
    EXPECT_LE(v.props.tau, 1.2);
    for (double x : {v.props.f_max, v.props.eta, v.props.tau, v.props.length}) {
      EXPECT_NEAR(x * 1000.0, std::round(x * 1000.0), 1e-6);
    }
  }
}

TEST(Placement, Errors) {
  const RoadGraph g = small_net(6);
  VehicleSettings s;
  s.count = g.node_count() + 1;
  Rng rng(1);
  EXPECT_EQ(code_of([&] { place_vehicles(g, s, PathMode::Shortest, {}, rng); }), Errc::TooManyVehicles);

  // a -> b only: the second vehicle must start at b, which reaches nothing.
  RoadGraph line;
  line.add_node({0, 0});
  line.add_node({0, 0.001});
  line.add_edge(0, 1, 10.0);
  line = clean_and_enhance(line);
  VehicleSettings two;
  two.count = 2;
  EXPECT_EQ(code_of([&] { place_vehicles(line, two, PathMode::Shortest, {}, rng); }), Errc::PlacementFailed);
}

TEST(Placement, NeverStartsAtDeadEnd) {
  // Chain 0 <-> 1 <-> 2 plus a one-way spur 2 -> 3; node 3 reaches nothing.
  RoadGraph g;
  for (int i = 0; i < 4; ++i) g.add_node({0, 0.001 * i});
  for (NodeId i = 0; i < 2; ++i) {
    g.add_edge(i, i + 1, 10.0);
    g.add_edge(i + 1, i, 10.0);
  }
  g.add_edge(2, 3, 10.0);
  g = clean_and_enhance(g);
  VehicleSettings s;
  s.count = 3;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    for (const auto& v : place_vehicles(g, s, PathMode::Shortest, {}, rng)) EXPECT_NE(v.route.start(), 3u);
  }
}

TEST(Simulation, DeterministicSnapshots) {
  auto run = [] {
    Simulation sim(small_net(7), small_config(3));
    std::string out;
    for (int i = 0; i < 1000; ++i) {
      sim.tick();
      out += snapshot_to_wire(sim.snapshot()).dump();
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Simulation, RewardUsesPostStepVelocity) {
  Simulation sim(straight_road(), small_config());
  for (int i = 0; i < 300; ++i) {
    sim.tick();
    const auto& v = sim.vehicles()[0];
    EXPECT_EQ(v.stats.rewards().at(v.stats.size() - 1), reward_speed_limit(v.sensors.v, v.sensors.v_limit));
    EXPECT_NEAR(v.sensors.v, velocity(v.motion, sim.config().physics), 1e-12);
  }
  EXPECT_EQ(sim.vehicles()[0].stats.size(), 300u);
}

TEST(Simulation, ArcPositionStaysOnRoute) {
  SimConfig c = small_config(4);
  Simulation sim(small_net(9), c);
  std::vector<double> last(4, 0.0);
  std::vector<NodeId> goal(4);
  for (std::size_t i = 0; i < 4; ++i) goal[i] = sim.vehicles()[i].route.goal();
  int reassigned = 0;
  for (int t = 0; t < 4000; ++t) {
    sim.tick();
    for (const auto& v : sim.vehicles()) {
      EXPECT_GE(v.motion.p, 0.0);
      EXPECT_LT(v.motion.p, v.route.length());
      if (v.route.goal() == goal[v.id]) {
        EXPECT_GE(v.motion.p, last[v.id]);
      } else {
        ++reassigned;
        goal[v.id] = v.route.goal();
      }
      last[v.id] = v.motion.p;
    }
  }
  EXPECT_GT(reassigned, 0);
}

TEST(Simulation, FlagsApplyNextTick) {
  Simulation sim(straight_road(), small_config());
  for (int i = 0; i < 100; ++i) sim.tick();
  EXPECT_GT(sim.agent().steps(), 64u);

  sim.post(SetFlags{false, std::nullopt});
  EXPECT_TRUE(sim.snapshot().training);
  const Mlp before = sim.agent().actor();
  const auto steps = sim.agent().steps();
  const auto filled = sim.agent().replay().size();
  for (int i = 0; i < 20; ++i) sim.tick();
  EXPECT_FALSE(sim.snapshot().training);
  EXPECT_EQ(sim.agent().actor(), before);
  EXPECT_EQ(sim.agent().steps(), steps);
  EXPECT_GT(sim.agent().replay().size(), std::min<std::size_t>(filled, 255));

  sim.post(SetFlags{std::nullopt, false});
  sim.tick();
  for (int i = 0; i < 20; ++i) {
    const auto& v = sim.vehicles()[0];
    const double expected = std::clamp(sim.agent().policy(sim.state_vector(v.sensors)), -1.0, 1.0);
    sim.tick();
    EXPECT_EQ(sim.vehicles()[0].stats.actions().at(sim.vehicles()[0].stats.size() - 1), expected);
  }

  sim.post(SetFlags{true, std::nullopt});
  sim.tick();
  EXPECT_NE(sim.agent().actor(), before);
}

TEST(Simulation, EvaluationModeIsReplayable) {
  auto run = [] {
    SimConfig c = small_config();
    Simulation sim(straight_road(), c);
    sim.set_flags(false, false);
    std::vector<double> trace;
    for (int i = 0; i < 500; ++i) {
      sim.tick();
      trace.push_back(sim.vehicles()[0].motion.p);
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(Simulation, PauseSelectAndSave) {
  Simulation sim(small_net(11), small_config(2));
  sim.post(Pause{});
  sim.tick();
  EXPECT_EQ(sim.ticks(), 0u);
  EXPECT_TRUE(sim.snapshot().paused);
  sim.post(Resume{});
  sim.post(SelectVehicle{1});
  for (int i = 0; i < 10; ++i) sim.tick();
  const auto snap = sim.snapshot();
  ASSERT_TRUE(snap.selected.has_value());
  EXPECT_EQ(snap.selected->vehicle, 1u);
  EXPECT_EQ(snap.selected->rewards.size(), 10u);
  EXPECT_EQ(snap.selected->a_lat.size(), 10u);

  const auto dir = std::filesystem::temp_directory_path() / "roadrl_sim_save";
  std::filesystem::remove_all(dir);
  auto done = std::make_shared<std::promise<ModelPaths>>();
  auto fut = done->get_future();
  sim.post(SaveModel{dir, done});
  sim.drain_commands();
  const auto paths = fut.get();
  EXPECT_TRUE(std::filesystem::exists(paths.actor));
  EXPECT_TRUE(std::filesystem::exists(paths.critic_txt));
  std::filesystem::remove_all(dir);
}

TEST(Simulation, LoadedModelMustMatchStateSize) {
  Simulation trained(straight_road(), small_config());
  LoadedModel m{trained.agent().actor(), trained.agent().critic(), std::nullopt, std::nullopt, 0};
  SimConfig c = small_config();
  c.state_sensors = {"v", "v_limit", "a_long"};
  EXPECT_EQ(code_of([&] { Simulation(straight_road(), c, m); }), Errc::ShapeMismatch);
  Simulation ok(straight_road(), small_config(), m);
  EXPECT_EQ(ok.agent().actor(), trained.agent().actor());
}

TEST(Config, JsonRoundTripAndDefaults) {
  const SimConfig d;
  EXPECT_EQ(d.ddpg.hidden, (std::vector<int>{400, 300, 200}));
  EXPECT_EQ(d.ddpg.actor_lr, 5e-5);
  EXPECT_EQ(d.ddpg.critic_lr, 1e-3);
  EXPECT_EQ(d.ddpg.target_rate, 0.01);
  EXPECT_EQ(d.ddpg.batch_size, 32u);
  EXPECT_EQ(d.ddpg.buffer_capacity, 10'000u);
  EXPECT_EQ(d.ddpg.warmup_steps, 10'000u);
  EXPECT_EQ(d.state_scale, 10.0);
  SimConfig c;
  c.seed = 99;
  c.path_mode = PathMode::Fastest;
  c.vehicles.count = 3;
  c.vehicles.mass = {1000, 1000};
  c.ddpg.hidden = {8, 4};
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.vehicles.mass, (Range{1000, 1000}));
}

TEST(Config, KeyValueLines) {
  const auto c = parse_config(
      "# comment\n"
      "seed = 5\n"
      "path_mode = fastest\n"
      "ddpg.hidden = [32, 16]\n"
      "ddpg.exploration.decay_start = 100\n"
      "vehicles.count = 2\n"
      "vehicles.mass = [1000, 1200]\n"
      "vehicles.tau = 1.0\n"
      "physics.T = 0.05\n");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.path_mode, PathMode::Fastest);
  EXPECT_EQ(c.ddpg.hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.ddpg.exploration.decay_start, 100u);
  EXPECT_EQ(c.vehicles.tau, (Range{1.0, 1.0}));
  EXPECT_EQ(c.physics.T, 0.05);
  EXPECT_EQ(c.ddpg.actor_lr, 5e-5);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { parse_config("bogus = 1\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("ddpg.actor_learning_rate = 1\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("vehicles.mass = [2000, 1000]\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("path_mode = scenic\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("state_sensors = [\"v\", \"speed\"]\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("seed = \"x\"\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("{\"seed\": }"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("just text\n"); }), Errc::ConfigError);
}

TEST(Wire, SnapshotSchema) {
  Simulation sim(small_net(12), small_config(2));
  sim.tick();
  const auto j = snapshot_to_wire(sim.snapshot());
  EXPECT_EQ(j.at("v"), 1);
  EXPECT_EQ(j.at("tick"), 1);
  ASSERT_EQ(j.at("vehicles").size(), 2u);
  for (const char* k : {"id", "lat", "lon", "heading_deg", "color_frac", "v", "v_limit"}) {
    EXPECT_TRUE(j.at("vehicles")[0].contains(k)) << k;
  }
  EXPECT_TRUE(j.at("stats").is_null());
  const auto net = network_to_wire(sim.graph());
  EXPECT_EQ(net.at("nodes").size(), sim.graph().node_count());
  EXPECT_EQ(net.at("edges").size(), sim.graph().edge_count());
  EXPECT_EQ(net.dump(), network_to_wire(sim.graph()).dump());
}
