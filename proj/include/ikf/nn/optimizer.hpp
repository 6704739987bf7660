#pragma once

#include <span>
#include <vector>

namespace ikf::nn {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Applies gradient steps to a fixed list of parameter blocks. Adam moment
// buffers are sized on the first call and must see the same block layout
// afterwards.
class Optimizer {
 public:
  Optimizer() = default;
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads);

  const OptimizerConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace ikf::nn
