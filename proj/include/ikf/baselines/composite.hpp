#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "ikf/nn/mlp.hpp"
#include "ikf/rl/qfunction.hpp"

namespace ikf::baselines {

// Glorot-initialized Q-network with a linear head.
nn::Mlp build_scratch(std::span<const Eigen::Index> widths, std::uint64_t seed);

// Layer widths {in, h1, ..., out} of a network.
std::vector<Eigen::Index> widths_of(const nn::Mlp& net);

// Q(s) = sum_i w_i(s) Q_i(s) + w_base(s) Q_base(s), w = softmax(attention(s)).
// Sources are frozen.
class A2tQ final : public rl::QFunction {
 public:
  A2tQ(std::vector<nn::Mlp> sources, nn::Mlp base, nn::Mlp attention);

  Eigen::Index state_dim() const override { return base_.input_dim(); }
  int num_actions() const override { return static_cast<int>(base_.output_dim()); }
  Eigen::MatrixXd q_values(const Eigen::MatrixXd& states) const override;
  rl::QGradients gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const override;
  std::vector<std::span<double>> trainable_parameters() override;
  std::unique_ptr<rl::QFunction> clone() const override { return std::make_unique<A2tQ>(*this); }
  std::string kind() const override { return "a2t"; }
  nlohmann::json to_json() const override;

  // (sources + 1) x batch, columns sum to 1; the last row weighs the base.
  Eigen::MatrixXd attention_weights(const Eigen::MatrixXd& states) const;
  const std::vector<nn::Mlp>& sources() const { return sources_; }
  const nn::Mlp& base() const { return base_; }
  const nn::Mlp& attention() const { return attention_; }

 private:
  std::vector<nn::Mlp> sources_;
  nn::Mlp base_;
  nn::Mlp attention_;
};

// Q(s) = sum_i W[i] .* Q_i(s) + aux(s), W a trainable sources x actions matrix.
class MultipolarQ final : public rl::QFunction {
 public:
  MultipolarQ(std::vector<nn::Mlp> sources, Eigen::MatrixXd aggregation, nn::Mlp aux);

  Eigen::Index state_dim() const override { return aux_.input_dim(); }
  int num_actions() const override { return static_cast<int>(aux_.output_dim()); }
  Eigen::MatrixXd q_values(const Eigen::MatrixXd& states) const override;
  rl::QGradients gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const override;
  std::vector<std::span<double>> trainable_parameters() override;
  std::unique_ptr<rl::QFunction> clone() const override { return std::make_unique<MultipolarQ>(*this); }
  std::string kind() const override { return "multipolar"; }
  nlohmann::json to_json() const override;

  const std::vector<nn::Mlp>& sources() const { return sources_; }
  const Eigen::MatrixXd& aggregation() const { return aggregation_; }
  Eigen::MatrixXd& aggregation() { return aggregation_; }
  const nn::Mlp& aux() const { return aux_; }
  nn::Mlp& aux() { return aux_; }

 private:
  std::vector<nn::Mlp> sources_;
  Eigen::MatrixXd aggregation_;
  nn::Mlp aux_;
};

// Sources {sender, receiver}; base and attention mirror the receiver's hidden
// widths with fresh Glorot weights.
std::unique_ptr<A2tQ> build_a2t(const nn::Mlp& sender, const nn::Mlp& receiver, std::uint64_t seed);
// Sources {sender, receiver}; all-ones aggregation, Glorot aux mirroring the receiver.
std::unique_ptr<MultipolarQ> build_multipolar(const nn::Mlp& sender, const nn::Mlp& receiver, std::uint64_t seed);

// {"kind": "mlp" | "a2t" | "multipolar", ...}; throws ParseError.
std::unique_ptr<rl::QFunction> policy_from_json(const nlohmann::json& j);
void save_policy(const rl::QFunction& q, const std::filesystem::path& path);
std::unique_ptr<rl::QFunction> load_policy(const std::filesystem::path& path);

}  // namespace ikf::baselines
