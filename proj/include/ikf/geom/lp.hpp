#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "ikf/geom/polytope.hpp"

namespace ikf::geom {

enum class LpStatus { optimal, infeasible, unbounded, failed };

std::string_view to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::failed;
  Eigen::VectorXd x;  // set when optimal
  double objective = 0.0;
};

// maximize objective . x subject to every constraint, x free.
// Dense two-phase tableau simplex with Bland's rule. A numerically broken
// solve is retried with bounded perturbations of the offsets before
// reporting LpStatus::failed.
LpResult solve_lp(const Eigen::VectorXd& objective, std::span<const Halfspace> constraints);

}  // namespace ikf::geom
