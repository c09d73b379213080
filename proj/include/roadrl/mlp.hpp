#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "roadrl/rng.hpp"

namespace roadrl {

enum class Activation { LeakyRelu, Tanh, Linear };

std::string_view activation_name(Activation act);
Activation activation_from_name(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::Linear;
};

/// Intermediate values of one forward pass. Columns are samples.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer; inputs[l+1] is layer l's output
  std::vector<Eigen::MatrixXd> pre;     // pre-activations per layer
  const void* owner = nullptr;
  std::uint64_t generation = 0;

  const Eigen::MatrixXd& output() const { return inputs.back(); }
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
  Eigen::MatrixXd input;  // dL/dx, same shape as the forward input
};

/// Fully connected network. Parameters are held in double precision for
/// arithmetic; `quantize()` rounds them to the 32-bit storage grid so that a
/// saved model reloads bit-exactly.
class Mlp {
 public:
  Mlp() = default;

  /// Zero-initialised network. `sizes` has one more entry than `activations`.
  Mlp(std::vector<int> sizes, std::vector<Activation> activations, double leaky_slope = 0.3);

  /// Weights ~ N(0, weight_std), biases zero, rounded to storage precision.
  static Mlp random(std::vector<int> sizes, std::vector<Activation> activations, Rng& rng,
                    double weight_std, double leaky_slope = 0.3);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  std::vector<Activation> activations() const;
  double leaky_slope() const { return leaky_slope_; }
  std::size_t parameter_count() const;

  /// "2-400-300-200-1" style rendering of the layer sizes.
  std::string layer_config() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Mutable access invalidates outstanding forward caches.
  std::vector<DenseLayer>& mutable_layers() {
    ++generation_;
    return layers_;
  }

  /// x: input_size x batch. Throws ShapeError on mismatch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, ForwardCache* cache = nullptr) const;

  /// Reverse-mode pass for dL/dy (output_size x batch). With
  /// `parameter_gradients` false only the input gradient is produced.
  MlpGradients backward(const ForwardCache& cache, const Eigen::MatrixXd& dy,
                        bool parameter_gradients = true) const;

  /// As above, writing into `out` so repeated calls reuse its storage.
  void backward_into(const ForwardCache& cache, const Eigen::MatrixXd& dy, MlpGradients& out,
                     bool parameter_gradients = true) const;

  void quantize();
  bool all_finite() const;
  bool same_shape(const Mlp& other) const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
  double leaky_slope_ = 0.3;
  std::uint64_t generation_ = 0;
};

/// target <- rate * live + (1 - rate) * target, elementwise.
void soft_update(Mlp& target, const Mlp& live, double rate);

}  // namespace roadrl
