#include "ikf/baselines/composite.hpp"

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/nn/model_io.hpp"

namespace ikf::baselines {

namespace {

void check_sources(const std::vector<nn::Mlp>& sources, Eigen::Index in, Eigen::Index out) {
  if (sources.empty()) throw ConfigError("composite policy needs at least one source");
  for (const auto& s : sources) {
    if (s.input_dim() != in || s.output_dim() != out)
      throw DimensionError("source network dimensions do not match the composite");
    if (s.head_activation() != nn::Activation::linear) throw ConfigError("source networks must have linear heads");
  }
}

nlohmann::json sources_json(const std::vector<nn::Mlp>& sources) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : sources) out.push_back(nn::model_to_json(s));
  return out;
}

std::vector<nn::Mlp> sources_from_json(const nlohmann::json& j) {
  if (!j.contains("sources") || !j.at("sources").is_array()) throw ParseError("policy.sources", "expected an array");
  std::vector<nn::Mlp> out;
  for (const auto& s : j.at("sources")) out.push_back(nn::model_from_json(s));
  return out;
}

nn::Mlp model_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("policy.") + key, "missing");
  return nn::model_from_json(j.at(key));
}

}  // namespace

nn::Mlp build_scratch(std::span<const Eigen::Index> widths, std::uint64_t seed) {
  return nn::Mlp::glorot(widths, nn::Activation::linear, seed);
}

std::vector<Eigen::Index> widths_of(const nn::Mlp& net) {
  std::vector<Eigen::Index> w{net.input_dim()};
  for (const auto& l : net.layers()) w.push_back(l.out_dim());
  return w;
}

A2tQ::A2tQ(std::vector<nn::Mlp> sources, nn::Mlp base, nn::Mlp attention)
    : sources_(std::move(sources)), base_(std::move(base)), attention_(std::move(attention)) {
  check_sources(sources_, base_.input_dim(), base_.output_dim());
  if (base_.head_activation() != nn::Activation::linear || attention_.head_activation() != nn::Activation::linear)
    throw ConfigError("A2T base and attention networks need linear heads");
  if (attention_.input_dim() != base_.input_dim() ||
      attention_.output_dim() != static_cast<Eigen::Index>(sources_.size()) + 1)
    throw DimensionError("attention network must map states to one weight per source plus the base");
}

Eigen::MatrixXd A2tQ::attention_weights(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd logits = attention_.forward_batch(states);
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  return logits;
}

Eigen::MatrixXd A2tQ::q_values(const Eigen::MatrixXd& states) const {
  const Eigen::MatrixXd w = attention_weights(states);
  const auto k = static_cast<Eigen::Index>(sources_.size());
  Eigen::MatrixXd q = base_.forward_batch(states) * w.row(k).asDiagonal();
  for (Eigen::Index i = 0; i < k; ++i)
    q += sources_[static_cast<std::size_t>(i)].forward_batch(states) * w.row(i).asDiagonal();
  return q;
}

rl::QGradients A2tQ::gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const {
  const auto k = static_cast<Eigen::Index>(sources_.size());
  nn::ForwardCache base_cache, att_cache;
  const Eigen::MatrixXd qb = base_.forward_batch(states, &base_cache);
  const Eigen::MatrixXd w = [&] {
    Eigen::MatrixXd logits = attention_.forward_batch(states, &att_cache);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      auto col = logits.col(c);
      col.array() = (col.array() - col.maxCoeff()).exp();
      col /= col.sum();
    }
    return logits;
  }();
  // g(i, b) = dL/dw_i for sample b
  Eigen::MatrixXd g(k + 1, states.cols());
  for (Eigen::Index i = 0; i < k; ++i)
    g.row(i) = d_q.cwiseProduct(sources_[static_cast<std::size_t>(i)].forward_batch(states)).colwise().sum();
  g.row(k) = d_q.cwiseProduct(qb).colwise().sum();
  const Eigen::RowVectorXd mean_g = w.cwiseProduct(g).colwise().sum();
  const Eigen::MatrixXd d_logits = w.cwiseProduct(g - mean_g.replicate(k + 1, 1));

  rl::QGradients out;
  rl::append_mlp_gradients(base_.backward(base_cache, d_q * w.row(k).asDiagonal()), out);
  rl::append_mlp_gradients(attention_.backward(att_cache, d_logits), out);
  return out;
}

std::vector<std::span<double>> A2tQ::trainable_parameters() {
  auto p = base_.parameter_spans();
  for (auto s : attention_.parameter_spans()) p.push_back(s);
  return p;
}

nlohmann::json A2tQ::to_json() const {
  return {{"kind", "a2t"},
          {"sources", sources_json(sources_)},
          {"base", nn::model_to_json(base_)},
          {"attention", nn::model_to_json(attention_)}};
}

MultipolarQ::MultipolarQ(std::vector<nn::Mlp> sources, Eigen::MatrixXd aggregation, nn::Mlp aux)
    : sources_(std::move(sources)), aggregation_(std::move(aggregation)), aux_(std::move(aux)) {
  check_sources(sources_, aux_.input_dim(), aux_.output_dim());
  if (aux_.head_activation() != nn::Activation::linear) throw ConfigError("MULTIPOLAR aux network needs a linear head");
  if (aggregation_.rows() != static_cast<Eigen::Index>(sources_.size()) || aggregation_.cols() != aux_.output_dim())
    throw DimensionError("aggregation matrix must be sources x actions");
}

Eigen::MatrixXd MultipolarQ::q_values(const Eigen::MatrixXd& states) const {
  Eigen::MatrixXd q = aux_.forward_batch(states);
  for (std::size_t i = 0; i < sources_.size(); ++i)
    q += aggregation_.row(static_cast<Eigen::Index>(i)).transpose().asDiagonal() * sources_[i].forward_batch(states);
  return q;
}

rl::QGradients MultipolarQ::gradient(const Eigen::MatrixXd& states, const Eigen::MatrixXd& d_q) const {
  rl::QGradients out;
  // Eigen matrices are column-major: block layout matches aggregation_.data().
  Eigen::MatrixXd d_agg(aggregation_.rows(), aggregation_.cols());
  for (std::size_t i = 0; i < sources_.size(); ++i)
    d_agg.row(static_cast<Eigen::Index>(i)) = d_q.cwiseProduct(sources_[i].forward_batch(states)).rowwise().sum().transpose();
  out.blocks.push_back(std::move(d_agg));
  nn::ForwardCache cache;
  aux_.forward_batch(states, &cache);
  rl::append_mlp_gradients(aux_.backward(cache, d_q), out);
  return out;
}

std::vector<std::span<double>> MultipolarQ::trainable_parameters() {
  std::vector<std::span<double>> p{{aggregation_.data(), static_cast<std::size_t>(aggregation_.size())}};
  for (auto s : aux_.parameter_spans()) p.push_back(s);
  return p;
}

nlohmann::json MultipolarQ::to_json() const {
  nlohmann::json agg = nlohmann::json::array();
  for (Eigen::Index i = 0; i < aggregation_.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index a = 0; a < aggregation_.cols(); ++a) row.push_back(aggregation_(i, a));
    agg.push_back(row);
  }
  return {{"kind", "multipolar"}, {"sources", sources_json(sources_)}, {"aggregation", agg}, {"aux", nn::model_to_json(aux_)}};
}

std::unique_ptr<A2tQ> build_a2t(const nn::Mlp& sender, const nn::Mlp& receiver, std::uint64_t seed) {
  auto w = widths_of(receiver);
  nn::Mlp base = build_scratch(w, mix_seed(seed, 1));
  w.back() = 3;
  nn::Mlp attention = build_scratch(w, mix_seed(seed, 2));
  return std::make_unique<A2tQ>(std::vector<nn::Mlp>{sender, receiver}, std::move(base), std::move(attention));
}

std::unique_ptr<MultipolarQ> build_multipolar(const nn::Mlp& sender, const nn::Mlp& receiver, std::uint64_t seed) {
  nn::Mlp aux = build_scratch(widths_of(receiver), mix_seed(seed, 3));
  Eigen::MatrixXd agg = Eigen::MatrixXd::Ones(2, receiver.output_dim());
  return std::make_unique<MultipolarQ>(std::vector<nn::Mlp>{sender, receiver}, std::move(agg), std::move(aux));
}

std::unique_ptr<rl::QFunction> policy_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ParseError("policy.kind", "missing or not a string");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "mlp") return std::make_unique<rl::MlpQ>(model_field(j, "model"));
  if (kind == "a2t") return std::make_unique<A2tQ>(sources_from_json(j), model_field(j, "base"), model_field(j, "attention"));
  if (kind == "multipolar") {
    auto sources = sources_from_json(j);
    if (!j.contains("aggregation") || !j.at("aggregation").is_array()) throw ParseError("policy.aggregation", "expected rows");
    const auto& rows = j.at("aggregation");
    Eigen::MatrixXd agg(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != agg.cols())
        throw ParseError("policy.aggregation[" + std::to_string(i) + "]", "ragged row");
      for (std::size_t a = 0; a < rows[i].size(); ++a) {
        if (!rows[i][a].is_number()) throw ParseError("policy.aggregation[" + std::to_string(i) + "][" + std::to_string(a) + "]", "not a number");
        agg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = rows[i][a].get<double>();
      }
    }
    return std::make_unique<MultipolarQ>(std::move(sources), std::move(agg), model_field(j, "aux"));
  }
  throw ParseError("policy.kind", "unknown policy kind '" + kind + "'");
}

void save_policy(const rl::QFunction& q, const std::filesystem::path& path) {
  nlohmann::json j = q.to_json();
  j["version"] = nn::kModelFormatVersion;
  nn::write_json_file(j, path);
}

std::unique_ptr<rl::QFunction> load_policy(const std::filesystem::path& path) {
  const auto j = nn::read_json_file(path);
  // A bare model file is accepted as an MLP policy.
  if (j.is_object() && !j.contains("kind") && j.contains("layers")) return std::make_unique<rl::MlpQ>(nn::model_from_json(j));
  return policy_from_json(j);
}

}  // namespace ikf::baselines
