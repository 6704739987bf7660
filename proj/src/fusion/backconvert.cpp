#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/fusion/fusion.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::fusion {

using geom::Halfspace;

namespace {

void add_distinct(std::vector<Halfspace>& out, const Halfspace& h, double tol) {
  for (const auto& e : out)
    if (geom::same_hyperplane(e, h, tol)) return;
  out.push_back(h.normalized());
}

nn::Layer random_layer(Eigen::Index out, Eigen::Index in, nn::Activation act, double scale, Rng& rng) {
  nn::Layer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out), act};
  for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = uniform(rng, -scale, scale);
  for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = uniform(rng, -scale, scale);
  return l;
}

}  // namespace

std::vector<Halfspace> distinct_hyperplanes(const rules::RuleSet& rs, bool include_decision_cuts, double tol) {
  std::vector<Halfspace> out;
  for (const auto& r : rs.rules)
    for (std::size_t j = 0; j < r.region.halfspaces.size(); ++j) {
      const auto kind = j < r.kinds.size() ? r.kinds[j] : rules::CutKind::unit_off;
      if (!rules::is_unit(kind) && !include_decision_cuts) continue;
      // Unit hyperplanes keep the source unit's orientation: off side stored.
      geom::Halfspace h = r.region.halfspaces[j];
      if (kind == rules::CutKind::unit_on) h = {-h.normal, -h.offset};
      add_distinct(out, h, tol);
    }
  return out;
}

std::vector<Halfspace> new_hyperplanes(const rules::RuleSet& fused, const rules::RuleSet& receiver,
                                       bool include_decision_cuts, double tol) {
  const auto known = distinct_hyperplanes(receiver, include_decision_cuts, tol);
  std::vector<Halfspace> out;
  for (const auto& h : distinct_hyperplanes(fused, include_decision_cuts, tol)) {
    bool seen = false;
    for (const auto& k : known) seen = seen || geom::same_hyperplane(h, k, tol);
    if (!seen) out.push_back(h);
  }
  return out;
}

nn::Mlp type1_from_hyperplanes(const std::vector<Halfspace>& hyperplanes, Eigen::Index head_dim,
                               const BackConvertConfig& cfg) {
  if (hyperplanes.empty()) throw ConfigError("type-1 conversion needs at least one hyperplane");
  if (head_dim < 1) throw ConfigError("head dimension must be positive");
  const Eigen::Index d = hyperplanes.front().dim();
  const auto n = static_cast<Eigen::Index>(hyperplanes.size());
  nn::Layer hidden{Eigen::MatrixXd(n, d), Eigen::VectorXd(n), nn::Activation::relu};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& h = hyperplanes[static_cast<std::size_t>(i)];
    if (h.dim() != d) throw DimensionError("hyperplanes of mixed dimension");
    hidden.weights.row(i) = h.normal.transpose();
    hidden.bias[i] = -h.offset;
  }
  Rng rng(cfg.seed);
  return nn::Mlp({std::move(hidden), random_layer(head_dim, n, cfg.head, cfg.head_init_scale, rng)});
}

nn::Mlp back_convert_type1(const rules::RuleSet& fused, Eigen::Index head_dim, const BackConvertConfig& cfg) {
  if (fused.rules.empty()) throw ConfigError("fused rule set is empty");
  return type1_from_hyperplanes(distinct_hyperplanes(fused, cfg.include_decision_cuts), head_dim, cfg);
}

Type2Result back_convert_type2(const nn::Mlp& receiver_net, const std::vector<Halfspace>& new_planes,
                               const BackConvertConfig& cfg) {
  if (new_planes.empty()) throw ConfigError("type-2 conversion needs at least one new hyperplane");
  const auto& first = receiver_net.layer(0);
  // Row-vector convention: hidden = x W + B with W (in x N).
  const Eigen::MatrixXd W = first.weights.transpose();
  const Eigen::RowVectorXd B = first.bias.transpose();
  const Eigen::Index d = W.rows();
  const auto m = static_cast<Eigen::Index>(new_planes.size());
  Eigen::MatrixXd Wp(d, m);
  Eigen::RowVectorXd Bp(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& h = new_planes[static_cast<std::size_t>(i)];
    if (h.dim() != d) throw DimensionError("new hyperplane dimension does not match the receiver input");
    Wp.col(i) = h.normal;
    Bp[i] = -h.offset;
  }

  Type2Result res;
  Eigen::MatrixXd Wpp;
  const bool square = W.rows() == W.cols();
  Eigen::FullPivLU<Eigen::MatrixXd> lu;
  if (square) lu.compute(W);
  if (square && lu.isInvertible()) {
    Wpp = lu.solve(Wp);
  } else if (cfg.allow_pinv) {
    Wpp = W.completeOrthogonalDecomposition().pseudoInverse() * Wp;
    res.used_pinv = true;
  } else {
    throw SingularMatrixError("receiver first-layer weight matrix is not invertible");
  }
  const Eigen::RowVectorXd Bpp = Bp - B * Wpp;

  Rng rng(cfg.seed);
  nn::Layer second{Wpp.transpose(), Bpp.transpose(), nn::Activation::relu};
  res.net = nn::Mlp({first, std::move(second),
                     random_layer(receiver_net.output_dim(), m, receiver_net.head_activation(), cfg.head_init_scale,
                                  rng)});
  return res;
}

}  // namespace ikf::fusion
