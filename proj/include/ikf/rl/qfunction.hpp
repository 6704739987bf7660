#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ikf/nn/mlp.hpp"

namespace ikf::rl {

// Gradient blocks in the order of QFunction::trainable_parameters().
struct QGradients {
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<std::span<const double>> spans() const;
  double squared_norm() const;
  void scale(double s);
};

// Action-value function trained by the DQN loop.
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual Eigen::Index state_dim() const = 0;
  virtual int num_actions() const = 0;
  // Columns are states; returns actions x batch.
  virtual Eigen::MatrixXd q_values(const Eigen::MatrixXd& states) const = 0;
  // Gradient of sum(d_q .* Q(states)) with respect to the trainable parameters.
  virtual QGradients gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const = 0;
  virtual std::vector<std::span<double>> trainable_parameters() = 0;
  virtual std::unique_ptr<QFunction> clone() const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const = 0;

  Eigen::VectorXd q(const Eigen::VectorXd& state) const { return q_values(state); }
  int greedy_action(const Eigen::VectorXd& state) const;
};

class MlpQ final : public QFunction {
 public:
  explicit MlpQ(nn::Mlp net);

  Eigen::Index state_dim() const override { return net_.input_dim(); }
  int num_actions() const override { return static_cast<int>(net_.output_dim()); }
  Eigen::MatrixXd q_values(const Eigen::MatrixXd& states) const override;
  QGradients gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const override;
  std::vector<std::span<double>> trainable_parameters() override { return net_.parameter_spans(); }
  std::unique_ptr<QFunction> clone() const override { return std::make_unique<MlpQ>(net_); }
  std::string kind() const override { return "mlp"; }
  nlohmann::json to_json() const override;

  const nn::Mlp& net() const { return net_; }

 private:
  nn::Mlp net_;
};

// Gradient blocks of an Mlp in parameter_spans() order.
void append_mlp_gradients(const nn::Gradients& g, QGradients& out);

}  // namespace ikf::rl
