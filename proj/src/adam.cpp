#include "roadrl/adam.hpp"

#include <cmath>

#include "roadrl/error.hpp"

namespace roadrl {

AdamState::AdamState(const Mlp& net, AdamConfig config) : config_(config) {
  for (const auto& layer : net.layers()) {
    m_weights_.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    v_weights_.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    m_bias_.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    v_bias_.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
}

void AdamState::apply(Mlp& net, const MlpGradients& grads) {
  const auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || grads.bias.size() != layers.size() ||
      m_weights_.size() != layers.size()) {
    throw Error(Errc::ShapeError, "gradient layout does not mirror the network");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.weights[l].rows() != layers[l].weights.rows() ||
        grads.weights[l].cols() != layers[l].weights.cols() ||
        grads.bias[l].size() != layers[l].bias.size()) {
      throw Error(Errc::ShapeError, "gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!grads.weights[l].allFinite() || !grads.bias[l].allFinite()) {
      throw Error(Errc::NumericFault, "non-finite gradient at layer " + std::to_string(l));
    }
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(step_);
  const double inv_c1 = 1.0 / (1.0 - std::pow(b1, t));
  const double inv_c2 = 1.0 / (1.0 - std::pow(b2, t));

  auto& dst = net.mutable_layers();
  for (std::size_t l = 0; l < dst.size(); ++l) {
    update_block(dst[l].weights.data(), m_weights_[l].data(), v_weights_[l].data(),
                 grads.weights[l].data(), static_cast<std::size_t>(dst[l].weights.size()), inv_c1,
                 inv_c2);
    update_block(dst[l].bias.data(), m_bias_[l].data(), v_bias_[l].data(), grads.bias[l].data(),
                 static_cast<std::size_t>(dst[l].bias.size()), inv_c1, inv_c2);
  }
}

void AdamState::update_block(double* params, double* m, double* v, const double* g,
                             std::size_t n, double inv_c1, double inv_c2) const {
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  // Single fused pass; the result is rounded onto the 32-bit storage grid.
  for (std::size_t i = 0; i < n; ++i) {
    const double mi = b1 * m[i] + (1.0 - b1) * g[i];
    const double vi = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    m[i] = mi;
    v[i] = vi;
    const double p = params[i] - lr * (mi * inv_c1) / (std::sqrt(vi * inv_c2) + eps);
    params[i] = static_cast<double>(static_cast<float>(p));
  }
}

}  // namespace roadrl
