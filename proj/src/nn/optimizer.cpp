#include "ikf/nn/optimizer.hpp"

#include <cmath>

#include "ikf/common/error.hpp"

namespace ikf::nn {

void Optimizer::step(std::span<const std::span<double>> params,
                     std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) throw Error("optimizer: parameter/gradient block count mismatch");
  if (cfg_.kind == OptimizerKind::sgd) {
    for (std::size_t b = 0; b < params.size(); ++b)
      for (std::size_t i = 0; i < params[b].size(); ++i) params[b][i] -= cfg_.learning_rate * grads[b][i];
    return;
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw Error("optimizer: parameter layout changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      params[b][i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
    }
  }
}

}  // namespace ikf::nn
