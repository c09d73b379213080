#include "roadrl/ddpg.hpp"

#include <algorithm>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

std::vector<int> layer_sizes(int input, const std::vector<int>& hidden) {
  std::vector<int> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

std::vector<Activation> layer_activations(std::size_t hidden_count, Activation out) {
  std::vector<Activation> acts(hidden_count, Activation::LeakyRelu);
  acts.push_back(out);
  return acts;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

void check_pair(const Mlp& actor, const Mlp& critic) {
  if (actor.output_size() != 1 || critic.output_size() != 1 ||
      critic.input_size() != actor.input_size() + actor.output_size()) {
    throw Error(Errc::ShapeMismatch, "critic input " + std::to_string(critic.input_size()) +
                                         " does not equal actor state " +
                                         std::to_string(actor.input_size()) + " plus action");
  }
}

}  // namespace

Mlp make_actor(int state_dim, const DdpgConfig& config, Rng& rng) {
  return Mlp::random(layer_sizes(state_dim, config.hidden),
                     layer_activations(config.hidden.size(), Activation::Tanh), rng,
                     config.weight_init_std, config.leaky_slope);
}

Mlp make_critic(int state_dim, const DdpgConfig& config, Rng& rng) {
  return Mlp::random(layer_sizes(state_dim + 1, config.hidden),
                     layer_activations(config.hidden.size(), Activation::Linear), rng,
                     config.weight_init_std, config.leaky_slope);
}

DdpgAgent::DdpgAgent(int state_dim, DdpgConfig config, std::uint64_t seed)
    : DdpgAgent(
          [&] {
            Rng init(mix_seed(seed, 1));
            return make_actor(state_dim, config, init);
          }(),
          [&] {
            Rng init(mix_seed(seed, 2));
            return make_critic(state_dim, config, init);
          }(),
          config, seed) {}

DdpgAgent::DdpgAgent(Mlp actor, Mlp critic, DdpgConfig config, std::uint64_t seed,
                     std::uint64_t steps, const Mlp* actor_target, const Mlp* critic_target)
    : config_(std::move(config)),
      actor_(std::move(actor)),
      critic_(std::move(critic)),
      replay_(config_.buffer_capacity, actor_.input_size(), 1),
      replay_rng_(mix_seed(seed, 3)),
      steps_(steps) {
  check_pair(actor_, critic_);
  actor_target_ = actor_target ? *actor_target : actor_;
  critic_target_ = critic_target ? *critic_target : critic_;
  if (!actor_target_.same_shape(actor_) || !critic_target_.same_shape(critic_)) {
    throw Error(Errc::ShapeMismatch, "target network shape differs from live network");
  }
  actor_opt_ = AdamState(actor_, AdamConfig{config_.actor_lr});
  critic_opt_ = AdamState(critic_, AdamConfig{config_.critic_lr});
}

double DdpgAgent::policy(std::span<const double> state) const {
  if (static_cast<int>(state.size()) != state_dim()) {
    throw Error(Errc::ShapeError, "state has " + std::to_string(state.size()) +
                                      " entries, actor expects " + std::to_string(state_dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> x(state.data(), static_cast<Eigen::Index>(state.size()));
  return actor_.forward(x)(0, 0);
}

double DdpgAgent::select_action(std::span<const double> state, ExplorationState& noise,
                                Rng& rng) const {
  if (training_ && exploration_ && in_warmup()) {
    return std::clamp(noise.next(steps_, rng), -1.0, 1.0);
  }
  const double mu = policy(state);
  if (!exploration_) return std::clamp(mu, -1.0, 1.0);
  return std::clamp(mu + noise.next(steps_, rng), -1.0, 1.0);
}

void DdpgAgent::observe(std::span<const double> state, double action, double reward,
                        std::span<const double> next_state) {
  const double a[1] = {action};
  replay_.push(state, a, reward, next_state);
}

UpdateResult DdpgAgent::train_step() {
  if (in_warmup()) {
    throw Error(Errc::NotWarm, "warm-up not elapsed (" + std::to_string(steps_) + " of " +
                                   std::to_string(config_.warmup_steps) + " steps)");
  }
  return update(replay_.sample(config_.batch_size, replay_rng_));
}

UpdateResult DdpgAgent::update(const TransitionBatch& batch) {
  const auto n = static_cast<double>(batch.states.cols());
  UpdateResult result;

  // Critic regression towards r + gamma * Q'(s', mu'(s')).
  const Eigen::MatrixXd next_actions = actor_target_.forward(batch.next_states);
  const Eigen::MatrixXd next_q = critic_target_.forward(stack_rows(batch.next_states, next_actions));
  const Eigen::RowVectorXd targets = batch.rewards + config_.gamma * next_q.row(0);

  const Eigen::MatrixXd q =
      critic_.forward(stack_rows(batch.states, batch.actions), &critic_cache_);
  const Eigen::RowVectorXd diff = q.row(0) - targets;
  result.critic_loss = diff.squaredNorm() / n;
  if (!std::isfinite(result.critic_loss)) {
    throw Error(Errc::NumericFault, "critic loss is not finite");
  }
  critic_.backward_into(critic_cache_, (2.0 / n) * diff, critic_grads_);
  critic_opt_.apply(critic_, critic_grads_);

  // Actor ascent on Q(s, mu(s)) through the critic's action input.
  const Eigen::MatrixXd mu = actor_.forward(batch.states, &actor_cache_);
  const Eigen::MatrixXd q_mu = critic_.forward(stack_rows(batch.states, mu), &q_cache_);
  result.actor_objective = q_mu.mean();
  critic_.backward_into(q_cache_, Eigen::MatrixXd::Constant(1, q_mu.cols(), 1.0 / n),
                        through_critic_, false);
  const Eigen::MatrixXd action_grad = -through_critic_.input.bottomRows(1);
  actor_.backward_into(actor_cache_, action_grad, actor_grads_);
  actor_opt_.apply(actor_, actor_grads_);

  soft_update(actor_target_, actor_, config_.target_rate);
  soft_update(critic_target_, critic_, config_.target_rate);
  return result;
}

}  // namespace roadrl
