#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "roadrl/adam.hpp"
#include "roadrl/exploration.hpp"
#include "roadrl/mlp.hpp"
#include "roadrl/replay_buffer.hpp"
#include "roadrl/rng.hpp"

namespace roadrl {

struct DdpgConfig {
  std::vector<int> hidden{400, 300, 200};
  double leaky_slope = 0.3;
  double weight_init_std = 0.05;
  double actor_lr = 5e-5;
  double critic_lr = 1e-3;
  double target_rate = 0.01;
  double gamma = 0.99;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10'000;
  std::uint64_t warmup_steps = 10'000;
  ExplorationConfig exploration;
};

struct UpdateResult {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

/// Actor network layout: state -> hidden (leaky) -> 1 (tanh).
Mlp make_actor(int state_dim, const DdpgConfig& config, Rng& rng);
/// Critic network layout: state ++ action -> hidden (leaky) -> 1 (linear).
Mlp make_critic(int state_dim, const DdpgConfig& config, Rng& rng);

/// Deep deterministic policy gradient agent with a single scalar action.
class DdpgAgent {
 public:
  DdpgAgent(int state_dim, DdpgConfig config, std::uint64_t seed);

  /// Adopts existing networks. Target networks default to copies of the live
  /// ones. Throws ShapeMismatch when actor and critic do not fit together.
  DdpgAgent(Mlp actor, Mlp critic, DdpgConfig config, std::uint64_t seed, std::uint64_t steps = 0,
            const Mlp* actor_target = nullptr, const Mlp* critic_target = nullptr);

  int state_dim() const { return actor_.input_size(); }
  const DdpgConfig& config() const { return config_; }

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& actor_target() const { return actor_target_; }
  const Mlp& critic_target() const { return critic_target_; }
  Mlp& mutable_actor() { return actor_; }
  Mlp& mutable_critic() { return critic_; }

  const ReplayBuffer& replay() const { return replay_; }

  bool training_enabled() const { return training_; }
  bool exploration_enabled() const { return exploration_; }
  void set_training(bool on) { training_ = on; }
  void set_exploration(bool on) { exploration_ = on; }

  /// Number of environment steps the agent has been driven through.
  std::uint64_t steps() const { return steps_; }
  void advance_step() { ++steps_; }

  bool in_warmup() const { return steps_ < config_.warmup_steps; }
  bool ready_to_train() const {
    return !in_warmup() && replay_.size() >= config_.batch_size;
  }

  /// Raw actor output for one state, in (-1, 1).
  double policy(std::span<const double> state) const;

  /// Exploration-aware action in [-1, 1]. While training and exploring
  /// during warm-up the action is noise alone.
  double select_action(std::span<const double> state, ExplorationState& noise, Rng& rng) const;

  void observe(std::span<const double> state, double action, double reward,
               std::span<const double> next_state);

  /// Samples a minibatch and performs one update. Throws NotWarm before
  /// warm-up has elapsed or while the buffer holds fewer than batch_size.
  UpdateResult train_step();

  /// One critic step, one actor step, then soft updates of both targets.
  UpdateResult update(const TransitionBatch& batch);

 private:
  DdpgConfig config_;
  Mlp actor_, critic_, actor_target_, critic_target_;
  AdamState actor_opt_, critic_opt_;
  ReplayBuffer replay_;
  Rng replay_rng_;
  // Reused between updates to avoid reallocating large gradient blocks.
  ForwardCache critic_cache_, actor_cache_, q_cache_;
  MlpGradients critic_grads_, actor_grads_, through_critic_;
  std::uint64_t steps_ = 0;
  bool training_ = true;
  bool exploration_ = true;
};

}  // namespace roadrl
