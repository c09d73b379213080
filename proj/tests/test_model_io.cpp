#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "roadrl/error.hpp"
#include "roadrl/model_io.hpp"
#include "roadrl/network_io.hpp"

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

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("roadrl_model_" + name);
  std::filesystem::remove_all(p);
  return p;
}

DdpgAgent trained_agent(std::uint64_t steps) {
  DdpgConfig config;
  DdpgAgent agent(2, config, 17);
  TransitionBatch batch;
  batch.states = Eigen::MatrixXd::Random(2, 32);
  batch.actions = Eigen::MatrixXd::Random(1, 32);
  batch.rewards = Eigen::RowVectorXd::Random(32);
  batch.next_states = Eigen::MatrixXd::Random(2, 32);
  agent.update(batch);
  agent.update(batch);
  return DdpgAgent(agent.actor(), agent.critic(), config, 17, steps, &agent.actor_target(),
                   &agent.critic_target());
}

}  // namespace

TEST(ModelIo, RoundTripGivesBitIdenticalOutputs) {
  const auto agent = trained_agent(120'000);
  const auto dir = scratch("rt");
  const auto paths = save_model(agent, dir);
  const auto loaded = load_model(paths.actor, paths.critic);
  EXPECT_EQ(loaded.actor, agent.actor());
  EXPECT_EQ(loaded.critic, agent.critic());
  EXPECT_EQ(loaded.steps, 120'000u);
  ASSERT_TRUE(loaded.actor_target.has_value());
  const DdpgAgent back = make_agent(loaded, DdpgConfig{}, 1);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double s[2] = {rng.uniform(0, 2), rng.uniform(0, 1)};
    EXPECT_EQ(back.policy(s), agent.policy(s));
  }
  std::filesystem::remove_all(dir);
}

TEST(ModelIo, FourFileNamingScheme) {
  const auto agent = trained_agent(120'000);
  const auto dir = scratch("names");
  const auto when = std::chrono::sys_days{std::chrono::year{2026} / 3 / 14} + std::chrono::hours{9} +
                    std::chrono::minutes{26} + std::chrono::seconds{53};
  const auto paths = save_model(agent, dir, when);
  EXPECT_EQ(paths.actor.filename(), "2-400-300-200-1_20260314_092653_120000_actor.acnet");
  EXPECT_EQ(paths.critic.filename(), "2-400-300-200-1_20260314_092653_120000_critic.acnet");
  EXPECT_EQ(paths.actor_txt.filename(), "2-400-300-200-1_20260314_092653_120000_actor.txt");
  EXPECT_EQ(paths.critic_txt.filename(), "2-400-300-200-1_20260314_092653_120000_critic.txt");
  int count = 0;
  const std::regex pattern(R"(2-400-300-200-1_\d{8}_\d{6}_120000_(actor|critic)\.(acnet|txt))");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    EXPECT_TRUE(std::regex_match(e.path().filename().string(), pattern)) << e.path();
    ++count;
  }
  EXPECT_EQ(count, 4);
  const auto txt = read_file_bytes(paths.actor_txt);
  EXPECT_NE(txt.find("layers = 2-400-300-200-1"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(ModelIo, TargetsDefaultToCopiesWithoutStoredBlobs) {
  const auto agent = trained_agent(5);
  NetFile actor{NetRole::Actor, agent.actor(), std::nullopt, 5, "20260101", "000000"};
  NetFile critic{NetRole::Critic, agent.critic(), std::nullopt, 5, "20260101", "000000"};
  const auto dir = scratch("notarget");
  std::filesystem::create_directories(dir);
  write_file_bytes(dir / "a.acnet", encode_acnet(actor));
  write_file_bytes(dir / "c.acnet", encode_acnet(critic));
  const auto loaded = load_model(dir / "a.acnet", dir / "c.acnet");
  EXPECT_FALSE(loaded.actor_target.has_value());
  const auto back = make_agent(loaded, DdpgConfig{}, 0);
  EXPECT_EQ(back.actor_target(), back.actor());
  EXPECT_EQ(back.critic_target(), back.critic());
  std::filesystem::remove_all(dir);
}

TEST(ModelIo, Errors) {
  const auto agent = trained_agent(1);
  const auto dir = scratch("errors");
  const auto paths = save_model(agent, dir);
  EXPECT_EQ(code_of([&] { load_model(paths.actor, paths.actor); }), Errc::ShapeMismatch);
  EXPECT_EQ(code_of([&] { load_model(paths.critic, paths.actor); }), Errc::ShapeMismatch);

  const auto bytes = read_file_bytes(paths.actor);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_acnet(bad); }), Errc::BadMagic);
  EXPECT_EQ(code_of([&] { decode_acnet(bytes.substr(0, bytes.size() - 3)); }), Errc::TruncatedFile);
  auto version = bytes;
  const auto pos = version.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  version[pos + 10] = '7';
  EXPECT_EQ(code_of([&] { decode_acnet(version); }), Errc::VersionMismatch);
  std::filesystem::remove_all(dir);
}
