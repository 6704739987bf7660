#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ikf::nn {

enum class Activation { relu, sigmoid, linear };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::relu;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

// On/off state of every ReLU unit in one hidden layer.
using LayerPattern = std::vector<std::uint8_t>;
using ActivationPattern = std::vector<LayerPattern>;

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;

  std::vector<std::span<const double>> spans() const;
};

// Per-layer intermediate values kept by a batched forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // in x batch, one per layer
  std::vector<Eigen::MatrixXd> pre;     // out x batch, one per layer
};

// Dense feed-forward network: ReLU hidden layers and one sigmoid or linear
// head. Inference is const and safe to share across threads.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  // Layer widths {in, h1, ..., out}. Weights and biases uniform in
  // [-scale, scale].
  static Mlp random(std::span<const Eigen::Index> widths, Activation head, std::uint64_t seed,
                    double scale = 0.1);
  // Glorot-uniform weights, zero biases.
  static Mlp glorot(std::span<const Eigen::Index> widths, Activation head, std::uint64_t seed);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t hidden_units() const;
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t k) const { return layers_.at(k); }
  Layer& mutable_layer(std::size_t k) { return layers_.at(k); }
  Activation head_activation() const { return layers_.back().activation; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // Final-layer pre-activation (logit or Q-values before any head squashing).
  Eigen::VectorXd forward_pre_head(const Eigen::VectorXd& x) const;
  ActivationPattern activation_pattern(const Eigen::VectorXd& x) const;

  // Columns of `inputs` are samples. Returns head outputs (out x batch).
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr) const;
  // Backpropagates dL/d(head pre-activation) through the cached pass.
  Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& d_pre_head) const;

  Gradients zero_gradients() const;
  std::vector<std::span<double>> parameter_spans();
  std::vector<std::span<const double>> parameter_spans() const;

  // Throws ikf::Error when dimensions do not chain, a hidden layer is not
  // ReLU, or a parameter is non-finite.
  void validate() const;

  bool operator==(const Mlp& other) const;

 private:
  std::vector<Layer> layers_;
};

double apply_activation(Activation a, double z);

// Classification / action decision of a network at x: for a single output,
// label 1 iff the head pre-activation is >= 0 (sigmoid >= 0.5); otherwise the
// argmax of the outputs with the lowest index winning ties.
int decision(const Mlp& net, const Eigen::VectorXd& x);
int decision_from_pre_head(const Eigen::VectorXd& pre_head);

}  // namespace ikf::nn
