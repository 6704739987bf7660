#include "ikf/rules/extract.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <iterator>
#include <string>

#include <omp.h>

#include "ikf/common/error.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::rules {

using geom::Halfspace;

namespace {

// A cell of the partial arrangement: constraints collected so far, the
// affine pre-activation map of the layer being split, and an interior point
// with a lower bound on its distance to the cell boundary.
struct Node {
  std::vector<Halfspace> cuts;
  std::vector<CutKind> kinds;
  nn::ActivationPattern pattern;
  std::size_t layer = 0;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::VectorXd center;
  double radius = 0.0;
};

struct Ctx {
  const nn::Mlp& net;
  const geom::Box& box;
  const ExtractConfig& cfg;
  std::size_t hidden_layers;
  std::vector<Halfspace> box_rows;
};

struct Side {
  bool feasible = false;
  Eigen::VectorXd center;
  double radius = 0.0;
};

// Interior test for cell ∩ {h}. Skips the LP when the known interior ball,
// shrunk to h's side, is already large enough.
Side probe(const Ctx& ctx, const Node& node, const Halfspace& h) {
  const double dist = h.slack(node.center) / h.normal.norm();
  const double r = std::min(node.radius, dist);
  if (r > ctx.cfg.min_radius) return {true, node.center, r};
  std::vector<Halfspace> rows = ctx.box_rows;
  rows.insert(rows.end(), node.cuts.begin(), node.cuts.end());
  rows.push_back(h);
  const auto ball = geom::chebyshev_center(rows);
  if (!ball || !(ball->radius > ctx.cfg.min_radius)) return {};
  return {true, ball->center, ball->radius};
}

Node child(const Node& parent, const Side& side, const Halfspace* cut, CutKind kind) {
  Node c = parent;
  if (cut) {
    c.cuts.push_back(*cut);
    c.kinds.push_back(kind);
  }
  c.center = side.center;
  c.radius = side.radius;
  return c;
}

// Children of `node` for the sign of f(x) = row.x + off, ordered
// (f <= 0, f > 0) with the labels 0 and 1.
template <typename Emit>
void split_sign(const Ctx& ctx, const Node& node, const Eigen::RowVectorXd& row, double off, bool unit, Emit&& emit) {
  const CutKind k0 = unit ? CutKind::unit_off : CutKind::decision;
  const CutKind k1 = unit ? CutKind::unit_on : CutKind::decision;
  const double scale = std::max(1.0, std::abs(off));
  if (row.norm() <= 1e-12 * scale) {
    emit(Node(node), off > 0.0 ? 1 : 0);
    return;
  }
  const Halfspace neg = Halfspace{row.transpose(), -off}.normalized();
  const Halfspace pos = Halfspace{-row.transpose(), off}.normalized();
  const Side s0 = probe(ctx, node, neg);
  const Side s1 = probe(ctx, node, pos);
  if (s0.feasible && s1.feasible) {
    emit(child(node, s0, &neg, k0), 0);
    emit(child(node, s1, &pos, k1), 1);
  } else if (s0.feasible) {
    emit(child(node, s0, nullptr, k0), 0);
  } else if (s1.feasible) {
    emit(child(node, s1, nullptr, k1), 1);
  } else {
    // The cell itself is thin; keep the side holding the interior point.
    emit(Node(node), row.dot(node.center) + off > 0.0 ? 1 : 0);
  }
}

DecisionRule make_rule(const Ctx& ctx, const Node& node, int decision) {
  DecisionRule r;
  r.region = geom::HPolytope{node.cuts, ctx.box};
  r.kinds = node.kinds;
  if (ctx.cfg.minimize_regions && !r.region.halfspaces.empty()) {
    try {
      auto reduced = geom::remove_redundant(r.region);
      r.kinds = surviving_kinds(r.region.halfspaces, r.kinds, reduced.halfspaces);
      r.region = std::move(reduced);
    } catch (const DegeneratePolytopeError&) {
    }
  }
  r.decision = decision;
  r.affine_out = {node.G, node.g};
  r.pattern = node.pattern;
  return r;
}

void head_split(const Ctx& ctx, const Node& node, std::vector<DecisionRule>& leaves) {
  if (node.G.rows() == 1) {
    split_sign(ctx, node, node.G.row(0), node.g[0], false,
               [&](Node c, int label) { leaves.push_back(make_rule(ctx, c, label)); });
    return;
  }
  // Argmax cells {q_a >= q_b for all b}.
  const Eigen::Index k = node.G.rows();
  std::vector<std::pair<int, Node>> cells;
  for (Eigen::Index a = 0; a < k; ++a) {
    Node c = node;
    bool empty = false;
    for (Eigen::Index b = 0; b < k && !empty; ++b) {
      if (b == a) continue;
      const Eigen::VectorXd n = (node.G.row(b) - node.G.row(a)).transpose();
      const double off = node.g[a] - node.g[b];
      if (n.norm() <= 1e-12 * std::max(1.0, std::abs(off))) {
        empty = off < 0.0 || (off == 0.0 && b < a);
        continue;
      }
      c.cuts.push_back(Halfspace{n, off}.normalized());
      c.kinds.push_back(CutKind::decision);
    }
    if (empty) continue;
    std::vector<Halfspace> rows = ctx.box_rows;
    rows.insert(rows.end(), c.cuts.begin(), c.cuts.end());
    const auto ball = geom::chebyshev_center(rows);
    if (!ball || !(ball->radius > ctx.cfg.min_radius)) continue;
    c.center = ball->center;
    c.radius = ball->radius;
    cells.emplace_back(static_cast<int>(a), std::move(c));
  }
  if (cells.size() == 1) {
    leaves.push_back(make_rule(ctx, node, cells.front().first));
    return;
  }
  if (cells.empty()) {
    leaves.push_back(make_rule(ctx, node, nn::decision_from_pre_head(node.G * node.center + node.g)));
    return;
  }
  for (const auto& [a, c] : cells) leaves.push_back(make_rule(ctx, c, a));
}

// Expands one node: either pushes children onto `out` or emits leaves.
void expand(const Ctx& ctx, const Node& node, std::vector<Node>& out, std::vector<DecisionRule>& leaves) {
  if (node.layer == ctx.hidden_layers) {
    head_split(ctx, node, leaves);
    return;
  }
  auto& bits = node.pattern.back();
  const auto unit = static_cast<Eigen::Index>(bits.size());
  if (unit == node.G.rows()) {
    // Layer finished: compose the next layer's pre-activation map.
    Node next = node;
    Eigen::VectorXd d(node.G.rows());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = bits[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd A = d.asDiagonal() * node.G;
    const Eigen::VectorXd a = d.asDiagonal() * node.g;
    const auto& L = ctx.net.layer(node.layer + 1);
    next.G = L.weights * A;
    next.g = L.weights * a + L.bias;
    next.layer = node.layer + 1;
    if (next.layer < ctx.hidden_layers) next.pattern.emplace_back();
    out.push_back(std::move(next));
    return;
  }
  split_sign(ctx, node, node.G.row(unit), node.g[unit], true, [&](Node c, int bit) {
    c.pattern.back().push_back(static_cast<std::uint8_t>(bit));
    out.push_back(std::move(c));
  });
}

void dfs(const Ctx& ctx, Node root, std::vector<DecisionRule>& leaves) {
  std::vector<Node> stack;
  stack.push_back(std::move(root));
  std::vector<Node> children;
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    children.clear();
    expand(ctx, node, children, leaves);
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
  }
}

Ctx make_ctx(const nn::Mlp& net, const geom::Box& box, const ExtractConfig& cfg) {
  net.validate();
  box.validate();
  if (net.input_dim() != box.dim()) throw DimensionError("box dimension does not match network input");
  if (net.hidden_units() > cfg.max_hidden_units)
    throw BudgetExceededError("network has " + std::to_string(net.hidden_units()) +
                                  " hidden units, budget is " + std::to_string(cfg.max_hidden_units),
                              estimate_pattern_count(net));
  return Ctx{net, box, cfg, net.num_layers() - 1, box.halfspaces()};
}

Node make_root(const Ctx& ctx) {
  Node root;
  const auto ball = geom::chebyshev_center(ctx.box_rows);
  root.center = ball->center;
  root.radius = ball->radius;
  const auto& L = ctx.net.layer(0);
  root.G = L.weights;
  root.g = L.bias;
  if (ctx.hidden_layers > 0) root.pattern.emplace_back();
  return root;
}

RuleSet finish(const Ctx& ctx, std::vector<DecisionRule> leaves) {
  std::stable_sort(leaves.begin(), leaves.end(), [](const DecisionRule& a, const DecisionRule& b) {
    if (a.pattern != b.pattern) return a.pattern < b.pattern;
    return a.decision < b.decision;
  });
  RuleSet rs;
  rs.source = ctx.cfg.source;
  rs.state_box = ctx.box;
  rs.rules = std::move(leaves);
  return rs;
}

}  // namespace

double estimate_pattern_count(const nn::Mlp& net) {
  const auto d = static_cast<std::size_t>(net.input_dim());
  double total = 1.0;
  for (std::size_t k = 0; k + 1 < net.num_layers(); ++k) {
    const auto n = static_cast<std::size_t>(net.layer(k).out_dim());
    double sum = 0.0, binom = 1.0;
    for (std::size_t i = 0; i <= std::min(d, n); ++i) {
      sum += binom;
      binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    total *= sum;
  }
  return total;
}

RuleSet extract_rules_serial(const nn::Mlp& net, const geom::Box& box, const ExtractConfig& cfg) {
  const Ctx ctx = make_ctx(net, box, cfg);
  std::vector<DecisionRule> leaves;
  dfs(ctx, make_root(ctx), leaves);
  return finish(ctx, std::move(leaves));
}

RuleSet extract_rules(const nn::Mlp& net, const geom::Box& box, const ExtractConfig& cfg) {
  const Ctx ctx = make_ctx(net, box, cfg);
  std::vector<DecisionRule> leaves;

  // Breadth-first until there is enough independent work, then fan out.
  const std::size_t target = 8 * static_cast<std::size_t>(omp_get_max_threads());
  std::deque<Node> frontier;
  frontier.push_back(make_root(ctx));
  std::vector<Node> children;
  while (!frontier.empty() && frontier.size() < target) {
    Node node = std::move(frontier.front());
    frontier.pop_front();
    children.clear();
    expand(ctx, node, children, leaves);
    for (auto& c : children) frontier.push_back(std::move(c));
  }

  std::vector<Node> work(std::make_move_iterator(frontier.begin()), std::make_move_iterator(frontier.end()));
  std::vector<std::vector<DecisionRule>> partial(work.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < work.size(); ++i) {
    try {
      dfs(ctx, std::move(work[i]), partial[i]);
    } catch (...) {
#pragma omp critical(ikf_extract_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& p : partial) std::move(p.begin(), p.end(), std::back_inserter(leaves));
  return finish(ctx, std::move(leaves));
}

}  // namespace ikf::rules
