#include "ikf/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"

namespace ikf::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw Error("unknown activation '" + std::string(name) + "'");
}

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::linear: return z;
  }
  return z;
}

namespace {

void activate_inplace(Activation a, Eigen::MatrixXd& m) {
  switch (a) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::sigmoid: m = (1.0 + (-m.array()).exp()).inverse().matrix(); break;
    case Activation::linear: break;
  }
}

}  // namespace

std::vector<std::span<const double>> Gradients::spans() const {
  std::vector<std::span<const double>> out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.emplace_back(weights[k].data(), static_cast<std::size_t>(weights[k].size()));
    out.emplace_back(bias[k].data(), static_cast<std::size_t>(bias[k].size()));
  }
  return out;
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

Mlp Mlp::random(std::span<const Eigen::Index> widths, Activation head, std::uint64_t seed,
                double scale) {
  if (widths.size() < 2) throw Error("network needs at least input and output widths");
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    Layer layer;
    layer.weights.resize(widths[k + 1], widths[k]);
    layer.bias.resize(widths[k + 1]);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
      layer.weights.data()[i] = uniform(rng, -scale, scale);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = uniform(rng, -scale, scale);
    layer.activation = (k + 2 == widths.size()) ? head : Activation::relu;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::glorot(std::span<const Eigen::Index> widths, Activation head, std::uint64_t seed) {
  Mlp net = random(widths, head, seed, 1.0);
  for (auto& layer : net.layers_) {
    layer.weights *= std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
    layer.bias.setZero();
  }
  return net;
}

Eigen::Index Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
Eigen::Index Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t Mlp::hidden_units() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) n += layers_[k].out_dim();
  return n;
}

void Mlp::validate() const {
  if (layers_.empty()) throw Error("network has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    const std::string where = "layer " + std::to_string(k);
    if (l.weights.rows() == 0 || l.weights.cols() == 0) throw DimensionError(where + ": empty weight matrix");
    if (l.bias.size() != l.weights.rows())
      throw DimensionError(where + ": bias length " + std::to_string(l.bias.size()) +
                           " does not match " + std::to_string(l.weights.rows()) + " rows");
    if (k > 0 && l.weights.cols() != layers_[k - 1].weights.rows())
      throw DimensionError(where + ": input width " + std::to_string(l.weights.cols()) +
                           " does not match previous output width " +
                           std::to_string(layers_[k - 1].weights.rows()));
    if (k + 1 < layers_.size() && l.activation != Activation::relu)
      throw Error(where + ": hidden layers must be relu");
    if (!l.weights.allFinite() || !l.bias.allFinite()) throw Error(where + ": non-finite parameter");
  }
}

Eigen::VectorXd Mlp::forward_pre_head(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim())
    throw DimensionError("input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(input_dim()));
  Eigen::VectorXd h = x;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k)
    h = (layers_[k].weights * h + layers_[k].bias).cwiseMax(0.0);
  return layers_.back().weights * h + layers_.back().bias;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z = forward_pre_head(x);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = apply_activation(head_activation(), z[i]);
  return z;
}

ActivationPattern Mlp::activation_pattern(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim())
    throw DimensionError("input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(input_dim()));
  ActivationPattern pattern;
  Eigen::VectorXd h = x;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
    const Eigen::VectorXd pre = layers_[k].weights * h + layers_[k].bias;
    LayerPattern bits(static_cast<std::size_t>(pre.size()));
    // pre-activation exactly 0 counts as off: closed "<=" side.
    for (Eigen::Index i = 0; i < pre.size(); ++i) bits[i] = pre[i] > 0.0 ? 1 : 0;
    pattern.push_back(std::move(bits));
    h = pre.cwiseMax(0.0);
  }
  return pattern;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs, ForwardCache* cache) const {
  if (inputs.rows() != input_dim())
    throw DimensionError("batch has " + std::to_string(inputs.rows()) + " rows, network expects " +
                         std::to_string(input_dim()));
  if (cache) {
    cache->inputs.resize(layers_.size());
    cache->pre.resize(layers_.size());
  }
  Eigen::MatrixXd h = inputs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd pre = layers_[k].weights * h;
    pre.colwise() += layers_[k].bias;
    if (cache) {
      cache->inputs[k] = std::move(h);
      cache->pre[k] = pre;
    }
    activate_inplace(layers_[k].activation, pre);
    h = std::move(pre);
  }
  return h;
}

Gradients Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& d_pre_head) const {
  Gradients g;
  g.weights.resize(layers_.size());
  g.bias.resize(layers_.size());
  Eigen::MatrixXd delta = d_pre_head;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    g.weights[k] = delta * cache.inputs[k].transpose();
    g.bias[k] = delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd back = layers_[k].weights.transpose() * delta;
    // previous layer is ReLU
    delta = back.cwiseProduct((cache.pre[k - 1].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

std::vector<std::span<double>> Mlp::parameter_spans() {
  std::vector<std::span<double>> out;
  for (auto& l : layers_) {
    out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

std::vector<std::span<const double>> Mlp::parameter_spans() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers_) {
    out.emplace_back(l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& a = layers_[k];
    const auto& b = other.layers_[k];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() ||
        a.weights.cols() != b.weights.cols() || a.weights != b.weights || a.bias != b.bias)
      return false;
  }
  return true;
}

int decision_from_pre_head(const Eigen::VectorXd& pre_head) {
  if (pre_head.size() == 1) return pre_head[0] >= 0.0 ? 1 : 0;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < pre_head.size(); ++i)
    if (pre_head[i] > pre_head[best]) best = i;
  return static_cast<int>(best);
}

int decision(const Mlp& net, const Eigen::VectorXd& x) {
  return decision_from_pre_head(net.forward_pre_head(x));
}

}  // namespace ikf::nn
