#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ikf::geom {

// Tolerances shared by every geometric predicate.
struct Tolerances {
  double feasibility = 1e-7;
  double dedup = 1e-7;
  double optimality = 1e-7;
};

inline constexpr Tolerances kDefaultTol{};

// normal . x <= offset
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;

  Eigen::Index dim() const { return normal.size(); }
  double slack(const Eigen::VectorXd& x) const { return offset - normal.dot(x); }
  // Same halfspace with a unit normal.
  Halfspace normalized() const;
};

// Axis-aligned bounding box, lo < hi per dimension.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box cube(Eigen::Index dim, double lo, double hi);

  Eigen::Index dim() const { return lo.size(); }
  double volume() const { return (hi - lo).prod(); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  // 2*dim halfspaces: x_i <= hi_i then -x_i <= -lo_i.
  std::vector<Halfspace> halfspaces() const;
  Box intersect(const Box& other) const;
  void validate() const;
};

// Convex region {x : a_j . x <= b_j for all j} clipped to `box`. The box
// keeps every stored region bounded.
struct HPolytope {
  std::vector<Halfspace> halfspaces;
  Box box;

  Eigen::Index dim() const { return box.dim(); }
  // Halfspaces followed by the box's halfspaces.
  std::vector<Halfspace> all_constraints() const;
  void validate() const;
};

struct VPolytope {
  std::vector<Eigen::VectorXd> vertices;
};

struct Ball {
  Eigen::VectorXd center;
  double radius = 0.0;
};

}  // namespace ikf::geom
