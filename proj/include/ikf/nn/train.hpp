#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ikf/nn/mlp.hpp"
#include "ikf/nn/optimizer.hpp"

namespace ikf::nn {

enum class Loss { binary_cross_entropy, mean_squared_error };

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  int batch_size = 32;
  Loss loss = Loss::binary_cross_entropy;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd;
};

// Rows of `inputs` are samples.
struct LabeledDataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  void validate() const;
};

struct TrainResult {
  Mlp net;
  std::vector<double> loss_history;  // mean training loss, one per epoch
};

// Mean loss over the given samples (columns of `inputs`) and its gradient.
struct LossAndGradient {
  double loss = 0.0;
  Gradients grad;
};
LossAndGradient loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& targets, Loss loss);

double evaluate_loss(const Mlp& net, const LabeledDataset& data, Loss loss);
double accuracy(const Mlp& net, const LabeledDataset& data);

// Mini-batch gradient descent. Bitwise reproducible for a fixed seed. Throws
// DivergenceError when the loss turns non-finite.
TrainResult train_supervised(Mlp net, const LabeledDataset& data, const TrainConfig& cfg);

}  // namespace ikf::nn
