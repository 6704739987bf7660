#include "ikf/geom/ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "ikf/common/error.hpp"
#include "ikf/geom/lp.hpp"

namespace ikf::geom {

namespace {

// Small dynamic bitset over constraint indices.
class IndexSet {
 public:
  explicit IndexSet(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= (std::uint64_t{1} << (i % 64)); }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  IndexSet operator&(const IndexSet& o) const {
    IndexSet r = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= o.words_[i];
    return r;
  }
  IndexSet& operator|=(const IndexSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  bool subset_of(const IndexSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if ((words_[i] & ~o.words_[i]) != 0) return false;
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct DdVertex {
  Eigen::VectorXd x;
  IndexSet tight;
};

void dedup_vertices(std::vector<DdVertex>& vs, double tol) {
  std::vector<DdVertex> out;
  out.reserve(vs.size());
  for (auto& v : vs) {
    bool merged = false;
    for (auto& u : out) {
      if ((u.x - v.x).lpNorm<Eigen::Infinity>() <= tol) {
        u.tight |= v.tight;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(std::move(v));
  }
  vs = std::move(out);
}

std::vector<Halfspace> without(std::span<const Halfspace> constraints, std::size_t k) {
  std::vector<Halfspace> out;
  out.reserve(constraints.size());
  for (std::size_t j = 0; j < constraints.size(); ++j)
    if (j != k) out.push_back(constraints[j]);
  return out;
}

}  // namespace

bool same_hyperplane(const Halfspace& a, const Halfspace& b, double tol, bool* same_orientation) {
  const double na = a.normal.norm();
  const double nb = b.normal.norm();
  if (na == 0.0 || nb == 0.0 || a.dim() != b.dim()) return false;
  const Eigen::VectorXd ua = a.normal / na;
  const Eigen::VectorXd ub = b.normal / nb;
  const double oa = a.offset / na;
  const double ob = b.offset / nb;
  if ((ua - ub).norm() <= tol && std::abs(oa - ob) <= tol) {
    if (same_orientation) *same_orientation = true;
    return true;
  }
  if ((ua + ub).norm() <= tol && std::abs(oa + ob) <= tol) {
    if (same_orientation) *same_orientation = false;
    return true;
  }
  return false;
}

std::optional<VPolytope> h_to_v(const HPolytope& p, const Tolerances& tol) {
  p.box.validate();
  const Eigen::Index d = p.dim();
  const double eps = 1e-9 * (1.0 + std::max(p.box.lo.cwiseAbs().maxCoeff(), p.box.hi.cwiseAbs().maxCoeff()));

  std::vector<Halfspace> rows = p.box.halfspaces();
  for (const auto& h : p.halfspaces) {
    if (h.normal.norm() == 0.0) {
      if (h.offset < 0.0) return std::nullopt;
      continue;
    }
    rows.push_back(h.normalized());
  }
  const std::size_t n_rows = rows.size();

  // Seed with the box corners; corner i is tight on one bound per axis.
  std::vector<DdVertex> verts;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    DdVertex v{Eigen::VectorXd(d), IndexSet(n_rows)};
    for (Eigen::Index i = 0; i < d; ++i) {
      const bool upper = (mask >> i) & 1u;
      v.x[i] = upper ? p.box.hi[i] : p.box.lo[i];
      v.tight.set(static_cast<std::size_t>(2 * i + (upper ? 0 : 1)));
    }
    verts.push_back(std::move(v));
  }

  for (std::size_t idx = static_cast<std::size_t>(2 * d); idx < n_rows; ++idx) {
    const auto& h = rows[idx];
    std::vector<double> s(verts.size());
    std::vector<std::size_t> plus, minus;
    for (std::size_t v = 0; v < verts.size(); ++v) {
      s[v] = h.normal.dot(verts[v].x) - h.offset;
      if (s[v] > eps) {
        plus.push_back(v);
      } else if (s[v] < -eps) {
        minus.push_back(v);
      } else {
        verts[v].tight.set(idx);
      }
    }
    if (plus.empty()) continue;

    std::vector<DdVertex> next;
    for (std::size_t v = 0; v < verts.size(); ++v)
      if (s[v] <= eps) next.push_back(verts[v]);

    for (auto pi : plus) {
      for (auto qi : minus) {
        IndexSet common = verts[pi].tight & verts[qi].tight;
        if (common.count() + 1 < static_cast<std::size_t>(d)) continue;
        // Combinatorial adjacency: no third vertex is tight on all of `common`.
        bool adjacent = true;
        for (std::size_t w = 0; w < verts.size() && adjacent; ++w) {
          if (w == pi || w == qi) continue;
          if (common.subset_of(verts[w].tight)) adjacent = false;
        }
        if (!adjacent) continue;
        const double t = s[pi] / (s[pi] - s[qi]);
        DdVertex nv{verts[pi].x + t * (verts[qi].x - verts[pi].x), common};
        nv.tight.set(idx);
        next.push_back(std::move(nv));
      }
    }
    dedup_vertices(next, tol.dedup);
    verts = std::move(next);
    if (verts.empty()) return std::nullopt;
  }

  VPolytope out;
  out.vertices.reserve(verts.size());
  for (auto& v : verts) out.vertices.push_back(std::move(v.x));
  return out;
}

bool contains(const HPolytope& p, const Eigen::VectorXd& x, bool strict, double tol) {
  if (x.size() != p.dim()) throw DimensionError("point dimension does not match polytope");
  for (const auto& h : p.halfspaces) {
    const double v = h.normal.dot(x) - h.offset;
    if (strict ? !(v < -tol) : !(v <= tol)) return false;
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double up = x[i] - p.box.hi[i];
    const double down = p.box.lo[i] - x[i];
    if (strict ? !(up < -tol && down < -tol) : !(up <= tol && down <= tol)) return false;
  }
  return true;
}

std::optional<Ball> chebyshev_center(std::span<const Halfspace> constraints) {
  if (constraints.empty()) return Ball{Eigen::VectorXd(), std::numeric_limits<double>::infinity()};
  const Eigen::Index d = constraints.front().dim();
  std::vector<Halfspace> rows;
  rows.reserve(constraints.size() + 1);
  for (const auto& h : constraints) {
    const double n = h.normal.norm();
    if (n == 0.0) {
      if (h.offset < 0.0) return std::nullopt;
      continue;
    }
    Eigen::VectorXd a(d + 1);
    a << h.normal / n, 1.0;
    rows.push_back({a, h.offset / n});
  }
  Eigen::VectorXd neg_r = Eigen::VectorXd::Zero(d + 1);
  neg_r[d] = -1.0;
  rows.push_back({neg_r, 0.0});
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(d + 1);
  obj[d] = 1.0;
  const auto res = solve_lp(obj, rows);
  switch (res.status) {
    case LpStatus::infeasible: return std::nullopt;
    case LpStatus::unbounded: return Ball{Eigen::VectorXd::Zero(d), std::numeric_limits<double>::infinity()};
    case LpStatus::failed: throw Error("chebyshev_center: LP solve failed");
    case LpStatus::optimal: break;
  }
  return Ball{res.x.head(d), std::max(0.0, res.x[d])};
}

std::optional<Ball> chebyshev_center(const HPolytope& p) {
  const auto rows = p.all_constraints();
  return chebyshev_center(rows);
}

HPolytope intersection(const HPolytope& p, const HPolytope& q) {
  if (p.dim() != q.dim()) throw DimensionError("intersecting polytopes of different dimension");
  HPolytope r;
  r.box = p.box.intersect(q.box);
  r.halfspaces = p.halfspaces;
  r.halfspaces.insert(r.halfspaces.end(), q.halfspaces.begin(), q.halfspaces.end());
  return r;
}

bool polytopes_intersect(const HPolytope& p, const HPolytope& q, const Tolerances& tol) {
  const HPolytope joint = intersection(p, q);
  for (Eigen::Index i = 0; i < joint.dim(); ++i)
    if (!(joint.box.lo[i] < joint.box.hi[i])) return false;
  const auto ball = chebyshev_center(joint);
  return ball && ball->radius > tol.feasibility;
}

bool polytopes_intersect(const HPolytope& p, const HPolytope& q, const VPolytope& p_vertices,
                         const VPolytope& q_vertices, const Tolerances& tol) {
  if (vertex_containment_test(p, q, p_vertices, q_vertices, tol.feasibility)) return true;
  return polytopes_intersect(p, q, tol);
}

bool vertex_containment_test(const HPolytope& p, const HPolytope& q, const VPolytope& p_vertices,
                             const VPolytope& q_vertices, double tol) {
  for (const auto& v : q_vertices.vertices)
    if (contains(p, v, true, tol)) return true;
  for (const auto& v : p_vertices.vertices)
    if (contains(q, v, true, tol)) return true;
  return false;
}

bool is_essential(std::span<const Halfspace> constraints, std::size_t k, double tol) {
  if (k >= constraints.size()) throw Error("is_essential: index out of range");
  const auto& hk = constraints[k];
  auto rows = without(constraints, k);
  rows.push_back({hk.normal, hk.offset + 1.0});
  const auto res = solve_lp(hk.normal, rows);
  if (res.status == LpStatus::infeasible)
    throw EmptyRegionError("is_essential: constraint set without " + std::to_string(k) + " is empty");
  if (res.status != LpStatus::optimal)
    throw Error("is_essential: LP status " + std::string(to_string(res.status)));
  return res.objective > hk.offset + tol * std::max(1.0, hk.normal.norm());
}

HPolytope remove_redundant(const HPolytope& p, const Tolerances& tol) {
  p.validate();
  const auto ball = chebyshev_center(p);
  if (!ball) throw EmptyRegionError("remove_redundant: region is empty");
  if (!(ball->radius > tol.feasibility))
    throw DegeneratePolytopeError("remove_redundant: region has no interior");
  const Eigen::VectorXd& x0 = ball->center;
  const auto box_rows = p.box.halfspaces();
  const auto& hs = p.halfspaces;

  // Exact duplicates (same oriented hyperplane) keep their first occurrence.
  std::vector<std::size_t> pending;
  for (std::size_t j = 0; j < hs.size(); ++j) {
    bool dup = false;
    for (auto i : pending) {
      bool same = false;
      if (same_hyperplane(hs[i], hs[j], 1e-12, &same) && same) {
        dup = true;
        break;
      }
    }
    if (!dup) pending.push_back(j);
  }

  std::vector<std::size_t> essential;
  auto erase = [&](std::size_t j) { pending.erase(std::find(pending.begin(), pending.end(), j)); };
  auto rows_with = [&](std::span<const std::size_t> ids) {
    std::vector<Halfspace> rows = box_rows;
    for (auto i : ids) rows.push_back(hs[i]);
    return rows;
  };

  while (!pending.empty()) {
    const std::size_t k = pending.front();
    auto rows = rows_with(essential);
    rows.push_back({hs[k].normal, hs[k].offset + 1.0});
    const auto lp = solve_lp(hs[k].normal, rows);
    if (lp.status != LpStatus::optimal)
      throw Error("remove_redundant: Test LP status " + std::string(to_string(lp.status)));
    if (lp.objective <= hs[k].offset + tol.optimality * std::max(1.0, hs[k].normal.norm())) {
      erase(k);
      continue;
    }
    // Shoot a ray from the interior point toward the LP optimum; the first
    // pending hyperplane it crosses is a facet.
    const Eigen::VectorXd dir = lp.x - x0;
    double best_t = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> hits;
    for (auto j : pending) {
      const double denom = hs[j].normal.dot(dir);
      if (denom <= 1e-14 * hs[j].normal.norm() * dir.norm()) continue;
      const double t = (hs[j].offset - hs[j].normal.dot(x0)) / denom;
      if (t < best_t - 1e-9 * std::max(1.0, best_t)) {
        best_t = t;
        hits.assign(1, j);
      } else if (std::abs(t - best_t) <= 1e-9 * std::max(1.0, best_t)) {
        hits.push_back(j);
      }
    }
    if (hits.empty()) throw Error("remove_redundant: ray shooting found no crossing");
    if (hits.size() == 1) {
      essential.push_back(hits.front());
      erase(hits.front());
      continue;
    }
    // Ray passed through a lower-dimensional face: settle each tied
    // hyperplane with a drop-one test against everything still in play.
    for (auto j : hits) {
      std::vector<std::size_t> others = essential;
      for (auto i : pending)
        if (i != j) others.push_back(i);
      auto all = rows_with(others);
      all.push_back(hs[j]);
      if (is_essential(all, all.size() - 1, tol.optimality)) essential.push_back(j);
      erase(j);
    }
  }

  std::sort(essential.begin(), essential.end());
  HPolytope out;
  out.box = p.box;
  for (auto j : essential) out.halfspaces.push_back(hs[j]);
  return out;
}

std::optional<Eigen::VectorXd> centroid(const HPolytope& p, const Tolerances& tol) {
  const auto v = h_to_v(p, tol);
  if (!v) return std::nullopt;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p.dim());
  for (const auto& x : v->vertices) c += x;
  return c / static_cast<double>(v->vertices.size());
}

}  // namespace ikf::geom
