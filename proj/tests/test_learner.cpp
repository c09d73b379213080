#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "roadrl/adam.hpp"
#include "roadrl/ddpg.hpp"
#include "roadrl/error.hpp"
#include "roadrl/exploration.hpp"
#include "roadrl/mlp.hpp"
#include "roadrl/replay_buffer.hpp"
#include "support/gradcheck.hpp"

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

DdpgConfig small_config() {
  DdpgConfig c;
  c.hidden = {16, 12};
  c.warmup_steps = 64;
  c.buffer_capacity = 256;
  return c;
}

}  // namespace

TEST(Mlp, ZeroNetworkGivesZero) {
  const Mlp net({3, 4, 1}, {Activation::LeakyRelu, Activation::Tanh});
  const Eigen::Vector3d x(1.5, -2.0, 7.0);
  EXPECT_EQ(net.forward(x)(0, 0), 0.0);
}

TEST(Mlp, IdentityLayer) {
  Mlp net({3, 3}, {Activation::Linear});
  net.mutable_layers()[0].weights = Eigen::Matrix3d::Identity();
  const Eigen::Vector3d x(1.5, -2.0, 7.0);
  EXPECT_EQ(net.forward(x), Eigen::MatrixXd(x));
}

TEST(Mlp, HandEvaluatedTwoLayer) {
  Mlp net({2, 2, 1}, {Activation::LeakyRelu, Activation::Linear});
  auto& l = net.mutable_layers();
  l[0].weights = Eigen::Matrix2d::Identity();
  l[1].weights = Eigen::RowVector2d(1, 1);
  l[1].bias = Eigen::VectorXd::Constant(1, 0.5);
  EXPECT_NEAR(net.forward(Eigen::Vector2d(1, -1))(0, 0), 1.2, 1e-15);
}

TEST(Mlp, ShapeAndCacheErrors) {
  Mlp net({2, 3, 1}, {Activation::LeakyRelu, Activation::Linear});
  EXPECT_EQ(code_of([&] { net.forward(Eigen::Vector3d::Zero()); }), Errc::ShapeError);
  ForwardCache cache;
  net.forward(Eigen::Vector2d(1, 2), &cache);
  EXPECT_EQ(code_of([&] { net.backward(cache, Eigen::MatrixXd::Ones(2, 1)); }), Errc::ShapeError);
  net.mutable_layers()[0].bias(0) = 1.0;
  EXPECT_EQ(code_of([&] { net.backward(cache, Eigen::MatrixXd::Ones(1, 1)); }), Errc::CacheError);
  const Mlp other = net;
  other.forward(Eigen::Vector2d(1, 2), &cache);
  EXPECT_EQ(code_of([&] { net.backward(cache, Eigen::MatrixXd::Ones(1, 1)); }), Errc::CacheError);
}

TEST(Mlp, ZeroUpstreamGradient) {
  Rng rng(1);
  const Mlp net = Mlp::random({3, 5, 2}, {Activation::LeakyRelu, Activation::Tanh}, rng, 0.5);
  ForwardCache cache;
  net.forward(Eigen::MatrixXd::Random(3, 4), &cache);
  const auto g = net.backward(cache, Eigen::MatrixXd::Zero(2, 4));
  for (const auto& w : g.weights) EXPECT_TRUE(w.isZero(0));
  for (const auto& b : g.bias) EXPECT_TRUE(b.isZero(0));
  EXPECT_TRUE(g.input.isZero(0));
}

TEST(Mlp, LinearLayerClosedForm) {
  Rng rng(2);
  const Mlp net = Mlp::random({3, 2}, {Activation::Linear}, rng, 1.0);
  const Eigen::Vector3d x(0.3, -1.2, 2.0);
  const Eigen::Vector2d t(0.5, 0.25);
  ForwardCache cache;
  const Eigen::MatrixXd y = net.forward(x, &cache);
  const auto g = net.backward(cache, y - t);
  const Eigen::MatrixXd expected = (y - t) * x.transpose();
  EXPECT_TRUE(g.weights[0].isApprox(expected, 1e-14));
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  Rng rng(77);
  const Activation kinds[] = {Activation::LeakyRelu, Activation::Tanh, Activation::Linear};
  for (int trial = 0; trial < 60; ++trial) {
    const Mlp net = oracle::random_small_net(rng, kinds[trial % 3], kinds[(trial / 3) % 3]);
    const auto r = oracle::gradient_check(net, rng);
    EXPECT_LE(r.worst_relative, 1e-4) << "trial " << trial << " at " << r.worst_where;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(Mlp, TanhOutputBounded) {
  Rng rng(3);
  const Mlp net = Mlp::random({2, 8, 1}, {Activation::LeakyRelu, Activation::Tanh}, rng, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double y = net.forward(Eigen::Vector2d(rng.normal(0, 100), rng.normal(0, 100)))(0, 0);
    EXPECT_LE(std::abs(y), 1.0);
  }
}

TEST(Mlp, LayerConfigString) {
  DdpgConfig config;
  Rng rng(0);
  EXPECT_EQ(make_actor(2, config, rng).layer_config(), "2-400-300-200-1");
  EXPECT_EQ(make_critic(2, config, rng).layer_config(), "3-400-300-200-1");
}

TEST(Mlp, InitialWeightsHaveRequestedSpread) {
  Rng rng(4);
  const Mlp net = Mlp::random({400, 300}, {Activation::Linear}, rng, 0.05);
  const auto& w = net.layers()[0].weights;
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().mean());
  EXPECT_NEAR(mean, 0.0, 3 * 0.05 / std::sqrt(120'000.0));
  EXPECT_NEAR(sd, 0.05, 0.001);
  EXPECT_TRUE(net.layers()[0].bias.isZero(0));
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(5);
  Mlp net = Mlp::random({2, 3, 1}, {Activation::LeakyRelu, Activation::Linear}, rng, 0.5);
  const Mlp before = net;
  AdamState opt(net, AdamConfig{1e-3});
  MlpGradients g;
  for (const auto& l : net.layers()) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  opt.apply(net, g);
  EXPECT_EQ(net, before);
  EXPECT_EQ(opt.step(), 1u);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  for (double grad : {0.5, -2.0, 0.05}) {
    Mlp net({1, 1}, {Activation::Linear});
    const double lr = 1e-3;
    AdamState opt(net, AdamConfig{lr});
    MlpGradients g;
    g.weights.push_back(Eigen::MatrixXd::Constant(1, 1, grad));
    g.bias.push_back(Eigen::VectorXd::Zero(1));
    opt.apply(net, g);
    const double delta = net.layers()[0].weights(0, 0);
    EXPECT_NEAR(delta, -lr * (grad > 0 ? 1 : -1), 1e-6 * lr) << grad;
    // m_hat = g and v_hat = g^2 after bias correction, stored at 32-bit precision.
    EXPECT_EQ(delta, static_cast<double>(static_cast<float>(-lr * grad / (std::abs(grad) + 1e-8))));
  }
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  Mlp net({1, 1}, {Activation::Linear});
  AdamState opt(net, AdamConfig{1e-2});
  MlpGradients g;
  g.weights.push_back(Eigen::MatrixXd::Constant(1, 1, -0.7));
  g.bias.push_back(Eigen::VectorXd::Constant(1, 0.2));
  double w = 0, b = 0;
  for (int i = 0; i < 200; ++i) {
    opt.apply(net, g);
    EXPECT_GT(net.layers()[0].weights(0, 0), w);
    EXPECT_LT(net.layers()[0].bias(0), b);
    w = net.layers()[0].weights(0, 0);
    b = net.layers()[0].bias(0);
  }
}

TEST(Adam, RejectsNonFiniteAndMisshapenGradients) {
  Mlp net({2, 1}, {Activation::Linear});
  AdamState opt(net, AdamConfig{});
  MlpGradients g;
  g.weights.push_back(Eigen::MatrixXd::Constant(1, 2, NAN));
  g.bias.push_back(Eigen::VectorXd::Zero(1));
  EXPECT_EQ(code_of([&] { opt.apply(net, g); }), Errc::NumericFault);
  g.weights[0] = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_EQ(code_of([&] { opt.apply(net, g); }), Errc::ShapeError);
  EXPECT_EQ(opt.step(), 0u);
}

TEST(SoftUpdate, RatesAndContraction) {
  Rng rng(6);
  const Mlp live = Mlp::random({3, 4, 1}, {Activation::LeakyRelu, Activation::Linear}, rng, 1.0);
  const Mlp old = Mlp::random({3, 4, 1}, {Activation::LeakyRelu, Activation::Linear}, rng, 1.0);

  Mlp t = old;
  soft_update(t, live, 1.0);
  EXPECT_EQ(t, live);
  t = old;
  soft_update(t, live, 0.0);
  EXPECT_EQ(t, old);

  Mlp one({1, 1}, {Activation::Linear});
  Mlp zero({1, 1}, {Activation::Linear});
  one.mutable_layers()[0].weights(0, 0) = 1.0;
  soft_update(zero, one, 0.01);
  EXPECT_EQ(zero.layers()[0].weights(0, 0), 0.01);

  t = old;
  soft_update(t, live, 0.01);
  for (std::size_t l = 0; l < t.layers().size(); ++l) {
    const Eigen::ArrayXXd before = (old.layers()[l].weights - live.layers()[l].weights).array();
    const Eigen::ArrayXXd after = (t.layers()[l].weights - live.layers()[l].weights).array();
    EXPECT_TRUE(((after - 0.99 * before).abs() <= 1e-12 * before.abs().maxCoeff()).all());
  }

  Mlp wrong({2, 1}, {Activation::Linear});
  EXPECT_EQ(code_of([&] { soft_update(wrong, live, 0.5); }), Errc::ShapeError);
}

TEST(ReplayBuffer, RingSemantics) {
  ReplayBuffer buf(10'000, 1);
  for (int i = 0; i <= 10'000; ++i) {
    const double s[1] = {static_cast<double>(i)}, a[1] = {0.0};
    buf.push(s, a, static_cast<double>(i), s);
  }
  EXPECT_EQ(buf.size(), 10'000u);
  std::set<double> rewards;
  for (std::size_t k = 0; k < buf.size(); ++k) rewards.insert(buf.reward_at(buf.slot_of(k)));
  EXPECT_EQ(rewards.count(0.0), 0u);
  EXPECT_EQ(rewards.count(10'000.0), 1u);
  EXPECT_EQ(buf.reward_at(buf.slot_of(0)), 1.0);
}

TEST(ReplayBuffer, NotWarmBelowBatch) {
  ReplayBuffer buf(100, 2);
  Rng rng(0);
  const double s[2] = {0, 0}, a[1] = {0};
  for (int i = 0; i < 31; ++i) buf.push(s, a, 0, s);
  EXPECT_EQ(code_of([&] { buf.sample(32, rng); }), Errc::NotWarm);
  buf.push(s, a, 0, s);
  EXPECT_EQ(buf.sample(32, rng).states.cols(), 32);
}

TEST(ReplayBuffer, UniformSampling) {
  ReplayBuffer buf(100, 1);
  for (int i = 0; i < 100; ++i) {
    const double s[1] = {0}, a[1] = {0};
    buf.push(s, a, i, s);
  }
  Rng rng(8);
  std::vector<int> count(100, 0);
  const int draws = 100'000;
  for (int k = 0; k < draws / 50; ++k) {
    const auto b = buf.sample(50, rng);
    for (Eigen::Index j = 0; j < b.rewards.size(); ++j) ++count[static_cast<int>(b.rewards(j))];
  }
  const double p = 0.01, sd = std::sqrt(draws * p * (1 - p));
  int outside = 0;
  for (int c : count) outside += std::abs(c - draws * p) > 3 * sd;
  // A 3-sigma band holds 99.7 % of items; allow the expected handful outside.
  EXPECT_LE(outside, 3);
  for (int c : count) EXPECT_LT(std::abs(c - draws * p), 4.5 * sd);
}

TEST(Exploration, ZeroDrawsStayZero) {
  ExplorationState es;
  for (int i = 0; i < 100; ++i) EXPECT_EQ(es.next_with_draw(i, 0.0), 0.0);
}

TEST(Exploration, RecursionValues) {
  ExplorationConfig c;
  c.epsilon_init = 1.0;
  ExplorationState es(c);
  es.set_history(1.0, 0.0);
  EXPECT_NEAR(es.next_with_draw(0, 0.0), 0.29, 1e-15);
  EXPECT_NEAR(es.next_with_draw(1, 0.0), 0.29 * 0.29 + 0.7, 1e-15);
  EXPECT_NEAR(es.previous(), 0.7841, 1e-15);
}

TEST(Exploration, EpsilonSchedule) {
  ExplorationState es;
  EXPECT_EQ(es.epsilon_at(0), 0.99995);
  EXPECT_EQ(es.epsilon_at(40'000), 0.99995);
  EXPECT_NEAR(es.epsilon_at(40'001), 0.99995 * 0.99995, 1e-15);
  double e = 0.99995;
  for (int s = 40'001; s <= 60'000; ++s) e *= 0.99995;
  EXPECT_NEAR(es.epsilon_at(60'000), e, 1e-12);
}

TEST(Exploration, StationaryMeanAndYuleWalkerVariance) {
  ExplorationConfig c;
  c.epsilon_init = 1.0;
  ExplorationState es(c);
  Rng rng(9);
  const int n = 1'000'000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < 1000; ++i) es.next(0, rng);  // burn-in
  for (int i = 0; i < n; ++i) {
    const double x = es.next(0, rng);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // Yule-Walker for x_t = p1 x_{t-1} + p2 x_{t-2} + e_t.
  const double p1 = 0.29, p2 = 0.7, s2 = 0.05;
  const double rho1 = p1 / (1 - p2);
  const double gamma0 = s2 / (1 - p1 * rho1 - p2 * (p1 * rho1 + p2));
  // Long-run variance of the sample mean: sigma^2 / (1 - p1 - p2)^2.
  const double mean_sd = std::sqrt(s2) / (1 - p1 - p2) / std::sqrt(static_cast<double>(n));
  EXPECT_LT(std::abs(mean), 3 * mean_sd);
  EXPECT_NEAR(var, gamma0, 0.1 * gamma0);
}

TEST(Reward, GaussianShape) {
  EXPECT_EQ(reward_speed_limit(7.0, 7.0), 0.0);
  EXPECT_NEAR(reward_speed_limit(4.5, 7.0), std::exp(-0.5) - 1.0, 1e-15);
  EXPECT_NEAR(reward_speed_limit(9.5, 7.0), -0.393469, 1e-6);
  double prev = 0.0;
  for (double d = 0.1; d < 15; d += 0.1) {
    const double r = reward_speed_limit(7.0 + d, 7.0);
    EXPECT_LT(r, prev);
    EXPECT_GE(r, -1.0);
    prev = r;
  }
  EXPECT_NEAR(reward_speed_limit(100, 5), -1.0, 1e-12);
}

TEST(Ddpg, ExplorationDisabledIsDeterministic) {
  DdpgAgent agent(2, small_config(), 1);
  agent.set_exploration(false);
  const double s[2] = {0.5, 0.7};
  ExplorationState es;
  Rng r1(1), r2(2);
  EXPECT_EQ(agent.select_action(s, es, r1), agent.select_action(s, es, r2));
  EXPECT_EQ(agent.select_action(s, es, r1), agent.policy(s));
}

TEST(Ddpg, ClampsActorPlusNoise) {
  auto config = small_config();
  config.exploration.sigma = 0.0;
  Rng init(3);
  Mlp actor = make_actor(2, config, init);
  for (auto& l : actor.mutable_layers()) {
    l.weights.setZero();
    l.bias.setZero();
  }
  actor.mutable_layers().back().bias(0) = std::atanh(0.9);
  DdpgAgent agent(actor, make_critic(2, config, init), config, 3, 20'000);
  const double s[2] = {0.1, 0.2};
  EXPECT_NEAR(agent.policy(s), 0.9, 1e-12);
  ExplorationState es(config.exploration);
  es.set_history(0.3 / (0.29 * es.epsilon_at(20'000)), 0.0);
  Rng rng(0);
  EXPECT_EQ(agent.select_action(s, es, rng), 1.0);
}

TEST(Ddpg, WarmupActionIgnoresActor) {
  const auto config = small_config();
  DdpgAgent a(2, config, 10), b(2, config, 11);
  ASSERT_TRUE(a.in_warmup());
  ASSERT_FALSE(a.actor() == b.actor());
  const double s[2] = {0.3, 0.9};
  for (int i = 0; i < 20; ++i) {
    ExplorationState ea(config.exploration), eb(config.exploration);
    Rng ra(i), rb(i);
    EXPECT_EQ(a.select_action(s, ea, ra), b.select_action(s, eb, rb));
  }
}

TEST(Ddpg, TrainStepRequiresWarmup) {
  DdpgAgent agent(2, small_config(), 1);
  EXPECT_EQ(code_of([&] { agent.train_step(); }), Errc::NotWarm);
}

TEST(Ddpg, ZeroCriticZeroRewardIsFixedPoint) {
  auto config = small_config();
  Rng init(4);
  Mlp critic = make_critic(2, config, init);
  for (auto& l : critic.mutable_layers()) {
    l.weights.setZero();
    l.bias.setZero();
  }
  const Mlp actor = make_actor(2, config, init);
  DdpgAgent agent(actor, critic, config, 4);
  TransitionBatch batch;
  batch.states = Eigen::MatrixXd::Random(2, 32);
  batch.actions = Eigen::MatrixXd::Random(1, 32);
  batch.rewards = Eigen::RowVectorXd::Zero(32);
  batch.next_states = Eigen::MatrixXd::Random(2, 32);
  const auto r = agent.update(batch);
  EXPECT_EQ(r.critic_loss, 0.0);
  EXPECT_EQ(agent.critic(), critic);
  EXPECT_EQ(agent.actor(), actor);
}

TEST(Ddpg, TargetsTrackLiveBySoftUpdate) {
  auto config = small_config();
  DdpgAgent agent(2, config, 5);
  Rng rng(5);
  TransitionBatch batch;
  batch.states = Eigen::MatrixXd::Random(2, 32);
  batch.actions = Eigen::MatrixXd::Random(1, 32);
  batch.rewards = Eigen::RowVectorXd::Random(32);
  batch.next_states = Eigen::MatrixXd::Random(2, 32);
  for (int k = 0; k < 3; ++k) {
    const Mlp old_actor_target = agent.actor_target();
    const Mlp old_critic_target = agent.critic_target();
    agent.update(batch);
    for (std::size_t l = 0; l < old_actor_target.layers().size(); ++l) {
      const Eigen::MatrixXd expected =
          0.01 * agent.actor().layers()[l].weights + 0.99 * old_actor_target.layers()[l].weights;
      EXPECT_EQ(agent.actor_target().layers()[l].weights, expected);
      const Eigen::VectorXd expected_bias =
          0.01 * agent.critic().layers()[l].bias + 0.99 * old_critic_target.layers()[l].bias;
      EXPECT_EQ(agent.critic_target().layers()[l].bias, expected_bias);
    }
  }
}

TEST(Ddpg, CriticRegressesToConstantReward) {
  auto config = small_config();
  config.gamma = 0.0;
  DdpgAgent agent(2, config, 6);
  Rng rng(6);
  TransitionBatch all;
  const int n = 64;
  all.states = Eigen::MatrixXd::Random(2, n);
  all.actions = Eigen::MatrixXd::Random(1, n);
  all.rewards = Eigen::RowVectorXd::Constant(n, -0.4);
  all.next_states = Eigen::MatrixXd::Random(2, n);
  auto full_mse = [&] {
    Eigen::MatrixXd in(3, n);
    in << all.states, all.actions;
    return (agent.critic().forward(in).row(0).array() + 0.4).square().mean();
  };
  const double start = full_mse();
  double prev = start;
  int increases = 0;
  for (int k = 0; k < 100; ++k) {
    agent.update(all);
    const double now = full_mse();
    if (now > prev * (1 + 1e-9)) ++increases;
    prev = now;
  }
  EXPECT_EQ(increases, 0);
  EXPECT_LT(prev, 0.1 * start);
}

TEST(Ddpg, MismatchedPairRejected) {
  auto config = small_config();
  Rng rng(7);
  const Mlp actor = make_actor(2, config, rng);
  EXPECT_EQ(code_of([&] { DdpgAgent(actor, actor, config, 1); }), Errc::ShapeMismatch);
}
