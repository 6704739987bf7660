#include "ikf/geom/polytope.hpp"

#include <string>

#include "ikf/common/error.hpp"

namespace ikf::geom {

Halfspace Halfspace::normalized() const {
  const double n = normal.norm();
  if (n == 0.0) return *this;
  return {normal / n, offset / n};
}

Box Box::cube(Eigen::Index dim, double lo, double hi) {
  return {Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

std::vector<Halfspace> Box::halfspaces() const {
  std::vector<Halfspace> out;
  out.reserve(static_cast<std::size_t>(2 * dim()));
  for (Eigen::Index i = 0; i < dim(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim());
    e[i] = 1.0;
    out.push_back({e, hi[i]});
    out.push_back({-e, -lo[i]});
  }
  return out;
}

Box Box::intersect(const Box& other) const { return {lo.cwiseMax(other.lo), hi.cwiseMin(other.hi)}; }

void Box::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size()) throw DimensionError("box bounds have mismatched dimensions");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw Error("box: lo must be < hi in dimension " + std::to_string(i));
}

std::vector<Halfspace> HPolytope::all_constraints() const {
  std::vector<Halfspace> out = halfspaces;
  const auto b = box.halfspaces();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void HPolytope::validate() const {
  box.validate();
  for (std::size_t j = 0; j < halfspaces.size(); ++j) {
    const auto& h = halfspaces[j];
    if (h.dim() != box.dim())
      throw DimensionError("halfspace " + std::to_string(j) + " has dimension " + std::to_string(h.dim()) +
                           ", box has " + std::to_string(box.dim()));
    if (!h.normal.allFinite() || !std::isfinite(h.offset))
      throw Error("halfspace " + std::to_string(j) + " is not finite");
    if (h.normal.isZero(0.0)) throw Error("halfspace " + std::to_string(j) + " has an all-zero normal");
  }
}

}  // namespace ikf::geom
