#include "ikf/geom/lp.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "ikf/common/random.hpp"

namespace ikf::geom {

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::failed: return "failed";
  }
  return "unknown";
}

namespace {

constexpr double kPivotEps = 1e-9;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// maximize c.x s.t. A x <= b, x >= 0. Variables are numbered 0..n-1,
// slacks n..n+m-1, the phase-one artificial is -1.
class Tableau {
 public:
  Tableau(const RowMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c)
      : m_(static_cast<int>(a.rows())),
        n_(static_cast<int>(a.cols())),
        d_(RowMatrix::Zero(m_ + 2, n_ + 2)),
        basic_(static_cast<std::size_t>(m_)),
        nonbasic_(static_cast<std::size_t>(n_ + 1)) {
    d_.topLeftCorner(m_, n_) = a;
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      d_(i, n_) = -1.0;
      d_(i, n_ + 1) = b[i];
    }
    for (int j = 0; j < n_; ++j) {
      nonbasic_[j] = j;
      d_(m_, j) = -c[j];
    }
    nonbasic_[n_] = -1;
    d_(m_ + 1, n_) = 1.0;
    iteration_cap_ = 1000 + 50 * (m_ + n_);
  }

  LpStatus solve(Eigen::VectorXd& x, double& objective) {
    if (m_ > 0) {
      int r = 0;
      for (int i = 1; i < m_; ++i)
        if (d_(i, n_ + 1) < d_(r, n_ + 1)) r = i;
      if (d_(r, n_ + 1) < -kPivotEps) {
        pivot(r, n_);
        const auto phase1 = simplex(1);
        if (phase1 == Step::stalled) return LpStatus::failed;
        if (phase1 == Step::unbounded || d_(m_ + 1, n_ + 1) < -kPivotEps) return LpStatus::infeasible;
        for (int i = 0; i < m_; ++i) {
          if (basic_[i] != -1) continue;
          int s = -1;
          for (int j = 0; j <= n_; ++j)
            if (s == -1 || d_(i, j) < d_(i, s) || (d_(i, j) == d_(i, s) && nonbasic_[j] < nonbasic_[s])) s = j;
          pivot(i, s);
        }
      }
    }
    const auto phase2 = simplex(2);
    if (phase2 == Step::stalled) return LpStatus::failed;
    if (phase2 == Step::unbounded) return LpStatus::unbounded;
    x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (basic_[i] >= 0 && basic_[i] < n_) x[basic_[i]] = d_(i, n_ + 1);
    objective = d_(m_, n_ + 1);
    if (!x.allFinite() || !std::isfinite(objective)) return LpStatus::failed;
    return LpStatus::optimal;
  }

 private:
  enum class Step { optimal, unbounded, stalled };

  void pivot(int r, int s) {
    const double inv = 1.0 / d_(r, s);
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r) continue;
      const double f = d_(i, s) * inv;
      if (f != 0.0)
        for (int j = 0; j < n_ + 2; ++j)
          if (j != s) d_(i, j) -= d_(r, j) * f;
      d_(i, s) = -f;
    }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) d_(r, j) *= inv;
    d_(r, s) = inv;
    std::swap(basic_[r], nonbasic_[s]);
  }

  Step simplex(int phase) {
    const int obj_row = phase == 1 ? m_ + 1 : m_;
    for (int iter = 0;; ++iter) {
      if (iter > iteration_cap_) return Step::stalled;
      // Bland: lowest-numbered improving variable enters.
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (phase == 2 && nonbasic_[j] == -1) continue;
        if (d_(obj_row, j) < -kPivotEps && (s == -1 || nonbasic_[j] < nonbasic_[s])) s = j;
      }
      if (s == -1) return Step::optimal;
      int r = -1;
      double best = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (d_(i, s) <= kPivotEps) continue;
        const double ratio = d_(i, n_ + 1) / d_(i, s);
        if (r == -1 || ratio < best - kPivotEps ||
            (std::abs(ratio - best) <= kPivotEps && basic_[i] < basic_[r])) {
          r = i;
          best = ratio;
        }
      }
      if (r == -1) return Step::unbounded;
      pivot(r, s);
    }
  }

  int m_;
  int n_;
  RowMatrix d_;
  std::vector<int> basic_;
  std::vector<int> nonbasic_;
  int iteration_cap_;
};

LpStatus solve_once(const Eigen::VectorXd& objective, std::span<const Halfspace> constraints,
                    const Eigen::VectorXd& offsets, Eigen::VectorXd& x, double& value) {
  const auto d = objective.size();
  const auto m = static_cast<Eigen::Index>(constraints.size());
  // Free variables split as x = u - v.
  RowMatrix a(m, 2 * d);
  for (Eigen::Index i = 0; i < m; ++i) {
    a.row(i).head(d) = constraints[static_cast<std::size_t>(i)].normal.transpose();
    a.row(i).tail(d) = -constraints[static_cast<std::size_t>(i)].normal.transpose();
  }
  Eigen::VectorXd c(2 * d);
  c << objective, -objective;
  Tableau t(a, offsets, c);
  Eigen::VectorXd uv;
  const auto status = t.solve(uv, value);
  if (status == LpStatus::optimal) x = uv.head(d) - uv.tail(d);
  return status;
}

}  // namespace

LpResult solve_lp(const Eigen::VectorXd& objective, std::span<const Halfspace> constraints) {
  // Rows are scaled to unit normals for conditioning; zero rows are checked
  // directly.
  std::vector<Halfspace> rows;
  rows.reserve(constraints.size());
  for (const auto& h : constraints) {
    const double n = h.normal.norm();
    if (n == 0.0) {
      if (h.offset < 0.0) return {LpStatus::infeasible, {}, 0.0};
      continue;
    }
    rows.push_back({h.normal / n, h.offset / n});
  }
  Eigen::VectorXd offsets(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) offsets[static_cast<Eigen::Index>(i)] = rows[i].offset;

  Rng rng(0x5eed);
  Eigen::VectorXd b = offsets;
  for (int attempt = 0; attempt < 4; ++attempt) {
    LpResult res;
    res.status = solve_once(objective, rows, b, res.x, res.objective);
    if (res.status == LpStatus::optimal) {
      bool ok = true;
      for (const auto& r : rows)
        if (r.normal.dot(res.x) > r.offset + 1e-7 * (1.0 + std::abs(r.offset))) ok = false;
      if (ok) {
        res.objective = objective.dot(res.x);
        return res;
      }
    } else if (res.status != LpStatus::failed) {
      return res;
    }
    // Relax offsets by a small positive amount and retry.
    const double scale = 1e-10 * std::pow(10.0, attempt);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = offsets[i] + scale * (1.0 + std::abs(offsets[i])) * uniform01(rng);
  }
  return {LpStatus::failed, {}, 0.0};
}

}  // namespace ikf::geom
