#include "ikf/nn/train.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"

namespace ikf::nn {

void LabeledDataset::validate() const {
  if (inputs.rows() != labels.size())
    throw DimensionError("dataset has " + std::to_string(inputs.rows()) + " inputs but " +
                         std::to_string(labels.size()) + " labels");
  if (!inputs.allFinite() || !labels.allFinite()) throw Error("dataset contains non-finite values");
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LossAndGradient loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& targets, Loss loss) {
  if (net.output_dim() != 1) throw DimensionError("supervised training expects a single-output network");
  ForwardCache cache;
  const Eigen::MatrixXd out = net.forward_batch(inputs, &cache);
  const Eigen::RowVectorXd z = cache.pre.back().row(0);
  const auto n = static_cast<double>(inputs.cols());
  Eigen::MatrixXd d_pre(1, inputs.cols());
  double total = 0.0;
  const Activation head = net.head_activation();
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    const double y = targets[i];
    if (loss == Loss::binary_cross_entropy) {
      if (head != Activation::sigmoid) throw ConfigError("binary cross-entropy requires a sigmoid head");
      total += softplus(z[i]) - y * z[i];
      d_pre(0, i) = (out(0, i) - y) / n;
    } else {
      const double p = out(0, i);
      const double diff = p - y;
      total += 0.5 * diff * diff;
      double dp = diff / n;
      if (head == Activation::sigmoid) dp *= p * (1.0 - p);
      d_pre(0, i) = dp;
    }
  }
  return {total / n, net.backward(cache, d_pre)};
}

double evaluate_loss(const Mlp& net, const LabeledDataset& data, Loss loss) {
  return loss_and_gradient(net, data.inputs.transpose(), data.labels, loss).loss;
}

double accuracy(const Mlp& net, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  long correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const int label = decision(net, data.inputs.row(i).transpose());
    if (label == static_cast<int>(std::lround(data.labels[i]))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train_supervised(Mlp net, const LabeledDataset& data, const TrainConfig& cfg) {
  data.validate();
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.epochs == 0) return {std::move(net), {}};
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (cfg.batch_size <= 0 || cfg.batch_size > data.size())
    throw ConfigError("batch_size must be in [1, dataset size]");
  if (data.dim() != net.input_dim()) throw DimensionError("dataset dimension does not match network input");

  Rng rng(cfg.seed);
  Optimizer opt({cfg.optimizer, cfg.learning_rate});
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::MatrixXd inputs_t = data.inputs.transpose();

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd x(data.dim(), b);
      Eigen::VectorXd y(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        x.col(i) = inputs_t.col(order[start + static_cast<std::size_t>(i)]);
        y[i] = data.labels[order[start + static_cast<std::size_t>(i)]];
      }
      auto lg = loss_and_gradient(net, x, y, cfg.loss);
      if (!std::isfinite(lg.loss))
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                              ": loss is non-finite");
      epoch_loss += lg.loss * static_cast<double>(b);
      opt.step(net.parameter_spans(), lg.grad.spans());
      for (const auto& span : std::as_const(net).parameter_spans())
        for (double v : span)
          if (!std::isfinite(v))
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                  ": parameters are non-finite");
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  net.validate();
  result.net = std::move(net);
  return result;
}

}  // namespace ikf::nn
