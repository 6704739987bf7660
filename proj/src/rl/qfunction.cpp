#include "ikf/rl/qfunction.hpp"

#include "ikf/common/error.hpp"
#include "ikf/nn/model_io.hpp"

namespace ikf::rl {

std::vector<std::span<const double>> QGradients::spans() const {
  std::vector<std::span<const double>> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.emplace_back(b.data(), static_cast<std::size_t>(b.size()));
  return out;
}

double QGradients::squared_norm() const {
  double s = 0.0;
  for (const auto& b : blocks) s += b.squaredNorm();
  return s;
}

void QGradients::scale(double s) {
  for (auto& b : blocks) b *= s;
}

int QFunction::greedy_action(const Eigen::VectorXd& state) const {
  return nn::decision_from_pre_head(q_values(state).col(0));
}

void append_mlp_gradients(const nn::Gradients& g, QGradients& out) {
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    out.blocks.push_back(g.weights[k]);
    out.blocks.push_back(g.bias[k]);
  }
}

MlpQ::MlpQ(nn::Mlp net) : net_(std::move(net)) {
  if (net_.head_activation() != nn::Activation::linear) throw ConfigError("Q-network head must be linear");
}

Eigen::MatrixXd MlpQ::q_values(const Eigen::MatrixXd& states) const { return net_.forward_batch(states); }

QGradients MlpQ::gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const {
  nn::ForwardCache cache;
  net_.forward_batch(states, &cache);
  QGradients g;
  append_mlp_gradients(net_.backward(cache, d_q), g);
  return g;
}

nlohmann::json MlpQ::to_json() const { return {{"kind", "mlp"}, {"model", nn::model_to_json(net_)}}; }

}  // namespace ikf::rl
