#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "roadrl/mlp.hpp"

namespace roadrl {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators mirroring an Mlp's parameters.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Mlp& net, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }

  /// One bias-corrected Adam update of `net` from `grads`, then rounds the
  /// parameters to storage precision. Throws NumericFault on non-finite
  /// gradients and ShapeError when the shapes do not mirror the network.
  void apply(Mlp& net, const MlpGradients& grads);

 private:
  void update_block(double* params, double* m, double* v, const double* g, std::size_t n,
                    double inv_c1, double inv_c2) const;

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Eigen::MatrixXd> m_weights_, v_weights_;
  std::vector<Eigen::VectorXd> m_bias_, v_bias_;
};

}  // namespace roadrl
