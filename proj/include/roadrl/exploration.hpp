#pragma once

#include <cmath>
#include <cstdint>

#include "roadrl/rng.hpp"

namespace roadrl {

struct ExplorationConfig {
  double ar1 = 0.29;            // weight of the previous noise sample
  double ar2 = 0.7;             // weight of the sample before that
  double sigma = std::sqrt(0.05);
  double epsilon_init = 0.99995;
  double epsilon_decay = 0.99995;
  std::uint64_t decay_start = 40'000;
};

/// Second-order autoregressive exploration noise, scaled by a decaying rate.
class ExplorationState {
 public:
  ExplorationState() = default;
  explicit ExplorationState(ExplorationConfig config)
      : config_(config), epsilon_(config.epsilon_init) {}

  const ExplorationConfig& config() const { return config_; }
  double previous() const { return prev1_; }
  double previous2() const { return prev2_; }
  double epsilon() const { return epsilon_; }

  void set_history(double prev1, double prev2) {
    prev1_ = prev1;
    prev2_ = prev2;
  }

  /// Rate at a given training step: constant until decay_start, then
  /// multiplied by epsilon_decay once per step.
  double epsilon_at(std::uint64_t step) const {
    if (step <= config_.decay_start) return config_.epsilon_init;
    return config_.epsilon_init *
           std::pow(config_.epsilon_decay, static_cast<double>(step - config_.decay_start));
  }

  /// Advances the AR(2) recursion with an explicit standard-normal draw and
  /// returns epsilon(step) times the new sample.
  double next_with_draw(std::uint64_t step, double standard_normal) {
    const double n = config_.ar1 * prev1_ + config_.ar2 * prev2_ + config_.sigma * standard_normal;
    prev2_ = prev1_;
    prev1_ = n;
    epsilon_ = epsilon_at(step);
    return epsilon_ * n;
  }

  double next(std::uint64_t step, Rng& rng) { return next_with_draw(step, rng.normal()); }

 private:
  ExplorationConfig config_;
  double prev1_ = 0.0;
  double prev2_ = 0.0;
  double epsilon_ = ExplorationConfig{}.epsilon_init;
};

/// Gaussian speed-limit tracking reward in (-1, 0]; zero exactly at v == v_max.
inline double reward_speed_limit(double v, double v_max, double width = 2.5) {
  const double z = (v_max - v) / width;
  return std::exp(-0.5 * z * z) - 1.0;
}

}  // namespace roadrl
