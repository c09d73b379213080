#include "roadrl/mlp.hpp"

#include <cmath>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

void quantize_matrix(Eigen::MatrixXd& m) {
  m = m.cast<float>().cast<double>();
}

void quantize_vector(Eigen::VectorXd& v) {
  v = v.cast<float>().cast<double>();
}

void apply_activation(Eigen::MatrixXd& z, Activation act, double slope) {
  switch (act) {
    case Activation::LeakyRelu:
      z = z.array().max(slope * z.array()).matrix();
      break;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::Linear:
      break;
  }
}

}  // namespace

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

Activation activation_from_name(std::string_view name) {
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  throw Error(Errc::ShapeError, "unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<int> sizes, std::vector<Activation> activations, double leaky_slope)
    : sizes_(std::move(sizes)), leaky_slope_(leaky_slope) {
  if (sizes_.size() < 2 || activations.size() != sizes_.size() - 1) {
    throw Error(Errc::ShapeError, "layer sizes and activations do not chain");
  }
  for (int s : sizes_) {
    if (s <= 0) throw Error(Errc::ShapeError, "layer size must be positive");
  }
  layers_.reserve(activations.size());
  for (std::size_t l = 0; l < activations.size(); ++l) {
    DenseLayer layer;
    layer.weights = Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]);
    layer.bias = Eigen::VectorXd::Zero(sizes_[l + 1]);
    layer.activation = activations[l];
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::random(std::vector<int> sizes, std::vector<Activation> activations, Rng& rng,
                double weight_std, double leaky_slope) {
  Mlp net(std::move(sizes), std::move(activations), leaky_slope);
  for (auto& layer : net.layers_) {
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
        layer.weights(i, j) = rng.normal(0.0, weight_std);
      }
    }
  }
  net.quantize();
  return net;
}

std::vector<Activation> Mlp::activations() const {
  std::vector<Activation> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) out.push_back(layer.activation);
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

std::string Mlp::layer_config() const {
  std::string out;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(sizes_[i]);
  }
  return out;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, ForwardCache* cache) const {
  if (layers_.empty() || x.rows() != input_size()) {
    throw Error(Errc::ShapeError, "forward input has " + std::to_string(x.rows()) +
                                      " rows, network expects " + std::to_string(input_size()));
  }
  if (cache == nullptr) {
    Eigen::MatrixXd h = x;
    for (const auto& layer : layers_) {
      Eigen::MatrixXd z(layer.weights.rows(), h.cols());
      z.noalias() = layer.weights * h;
      z.colwise() += layer.bias;
      apply_activation(z, layer.activation, leaky_slope_);
      h = std::move(z);
    }
    return h;
  }

  cache->owner = this;
  cache->generation = generation_;
  cache->inputs.resize(layers_.size() + 1);
  cache->pre.resize(layers_.size());
  cache->inputs[0] = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Eigen::MatrixXd& z = cache->pre[l];
    z.resize(layer.weights.rows(), x.cols());
    z.noalias() = layer.weights * cache->inputs[l];
    z.colwise() += layer.bias;
    cache->inputs[l + 1] = z;
    apply_activation(cache->inputs[l + 1], layer.activation, leaky_slope_);
  }
  return cache->output();
}

MlpGradients Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& dy,
                           bool parameter_gradients) const {
  MlpGradients grads;
  backward_into(cache, dy, grads, parameter_gradients);
  return grads;
}

void Mlp::backward_into(const ForwardCache& cache, const Eigen::MatrixXd& dy, MlpGradients& out,
                        bool parameter_gradients) const {
  if (cache.owner != this || cache.generation != generation_ ||
      cache.inputs.size() != layers_.size() + 1) {
    throw Error(Errc::CacheError, "forward cache does not belong to the current parameters");
  }
  if (dy.rows() != output_size() || dy.cols() != cache.output().cols()) {
    throw Error(Errc::ShapeError, "output gradient shape does not match forward output");
  }

  if (parameter_gradients) {
    out.weights.resize(layers_.size());
    out.bias.resize(layers_.size());
  } else {
    out.weights.clear();
    out.bias.clear();
  }
  Eigen::MatrixXd delta = dy;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    switch (layer.activation) {
      case Activation::LeakyRelu:
        delta = (cache.pre[l].array() >= 0.0).select(delta, leaky_slope_ * delta);
        break;
      case Activation::Tanh:
        delta.array() *= 1.0 - cache.inputs[l + 1].array().square();
        break;
      case Activation::Linear:
        break;
    }
    if (parameter_gradients) {
      out.weights[l].resize(layer.weights.rows(), layer.weights.cols());
      out.weights[l].noalias() = delta * cache.inputs[l].transpose();
      out.bias[l] = delta.rowwise().sum();
    }
    Eigen::MatrixXd next(layer.weights.cols(), delta.cols());
    next.noalias() = layer.weights.transpose() * delta;
    delta = std::move(next);
  }
  out.input = std::move(delta);
}

void Mlp::quantize() {
  ++generation_;
  for (auto& layer : layers_) {
    quantize_matrix(layer.weights);
    quantize_vector(layer.bias);
  }
}

bool Mlp::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

bool Mlp::same_shape(const Mlp& other) const {
  return sizes_ == other.sizes_ && activations() == other.activations();
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (!a.same_shape(b) || a.leaky_slope_ != b.leaky_slope_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weights != b.layers_[l].weights) return false;
    if (a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

void soft_update(Mlp& target, const Mlp& live, double rate) {
  if (!target.same_shape(live)) {
    throw Error(Errc::ShapeError, "soft update between differently shaped networks");
  }
  auto& dst = target.mutable_layers();
  const auto& src = live.layers();
  const double keep = 1.0 - rate;
  for (std::size_t l = 0; l < dst.size(); ++l) {
    dst[l].weights = rate * src[l].weights + keep * dst[l].weights;
    dst[l].bias = rate * src[l].bias + keep * dst[l].bias;
  }
}

}  // namespace roadrl
