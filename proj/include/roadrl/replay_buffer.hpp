#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "roadrl/error.hpp"
#include "roadrl/rng.hpp"

namespace roadrl {

/// Minibatch in column layout, ready for Mlp::forward.
struct TransitionBatch {
  Eigen::MatrixXd states;       // state_dim x n
  Eigen::MatrixXd actions;      // action_dim x n
  Eigen::RowVectorXd rewards;   // 1 x n
  Eigen::MatrixXd next_states;  // state_dim x n
};

/// Fixed-capacity ring of (s, a, r, s') transitions; overwrites oldest-first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim, int action_dim = 1)
      : capacity_(capacity),
        states_(state_dim, static_cast<Eigen::Index>(capacity)),
        actions_(action_dim, static_cast<Eigen::Index>(capacity)),
        rewards_(static_cast<Eigen::Index>(capacity)),
        next_states_(state_dim, static_cast<Eigen::Index>(capacity)) {
    if (capacity == 0) throw Error(Errc::ShapeError, "replay capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  int state_dim() const { return static_cast<int>(states_.rows()); }
  int action_dim() const { return static_cast<int>(actions_.rows()); }

  void push(std::span<const double> state, std::span<const double> action, double reward,
            std::span<const double> next_state) {
    if (static_cast<Eigen::Index>(state.size()) != states_.rows() ||
        static_cast<Eigen::Index>(next_state.size()) != states_.rows() ||
        static_cast<Eigen::Index>(action.size()) != actions_.rows()) {
      throw Error(Errc::ShapeError, "transition does not match replay buffer dimensions");
    }
    const auto col = static_cast<Eigen::Index>(cursor_);
    for (std::size_t i = 0; i < state.size(); ++i) {
      states_(static_cast<Eigen::Index>(i), col) = state[i];
      next_states_(static_cast<Eigen::Index>(i), col) = next_state[i];
    }
    for (std::size_t i = 0; i < action.size(); ++i) {
      actions_(static_cast<Eigen::Index>(i), col) = action[i];
    }
    rewards_(col) = reward;
    cursor_ = (cursor_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }

  /// Slot index of the i-th oldest stored transition.
  std::size_t slot_of(std::size_t age_rank) const {
    const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
    return (oldest + age_rank) % capacity_;
  }

  double reward_at(std::size_t slot) const { return rewards_(static_cast<Eigen::Index>(slot)); }

  /// Uniform draw with replacement. Throws NotWarm while size < n.
  TransitionBatch sample(std::size_t n, Rng& rng) const {
    if (size_ < n || n == 0) {
      throw Error(Errc::NotWarm, "replay holds " + std::to_string(size_) + " transitions, " +
                                     std::to_string(n) + " requested");
    }
    TransitionBatch batch;
    const auto cols = static_cast<Eigen::Index>(n);
    batch.states.resize(states_.rows(), cols);
    batch.actions.resize(actions_.rows(), cols);
    batch.rewards.resize(cols);
    batch.next_states.resize(states_.rows(), cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto src = static_cast<Eigen::Index>(rng.uniform_index(size_));
      batch.states.col(j) = states_.col(src);
      batch.actions.col(j) = actions_.col(src);
      batch.rewards(j) = rewards_(src);
      batch.next_states.col(j) = next_states_.col(src);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  Eigen::MatrixXd states_;
  Eigen::MatrixXd actions_;
  Eigen::VectorXd rewards_;
  Eigen::MatrixXd next_states_;
};

}  // namespace roadrl
