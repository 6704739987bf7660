#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ikf/geom/polytope.hpp"

namespace ikf::geom {

// Extreme points of the region, deduplicated within tol.dedup, computed by
// the double description method seeded with the bounding box.
// std::nullopt when the region is empty.
std::optional<VPolytope> h_to_v(const HPolytope& p, const Tolerances& tol = kDefaultTol);

// strict: a.x < b - tol for every constraint; otherwise a.x <= b + tol.
// Box faces count as constraints.
bool contains(const HPolytope& p, const Eigen::VectorXd& x, bool strict, double tol);

// Largest inscribed ball (unit-normalized rows). std::nullopt when infeasible;
// radius 0 for a region without interior; +inf radius if unbounded.
std::optional<Ball> chebyshev_center(std::span<const Halfspace> constraints);
std::optional<Ball> chebyshev_center(const HPolytope& p);

// Region p ∩ q: merged halfspaces, intersected boxes.
HPolytope intersection(const HPolytope& p, const HPolytope& q);

// True iff p ∩ q has an interior point with Chebyshev radius > tol.
bool polytopes_intersect(const HPolytope& p, const HPolytope& q, const Tolerances& tol = kDefaultTol);
// Same, trying the vertex-containment check on precomputed vertices first.
bool polytopes_intersect(const HPolytope& p, const HPolytope& q, const VPolytope& p_vertices,
                         const VPolytope& q_vertices, const Tolerances& tol = kDefaultTol);

// Vertex test: some vertex of one polytope lies strictly inside the other.
// Sufficient for overlap, not necessary.
bool vertex_containment_test(const HPolytope& p, const HPolytope& q, const VPolytope& p_vertices,
                             const VPolytope& q_vertices, double tol = kDefaultTol.feasibility);

// Test(J, k): maximize a_k.x over {a_j.x <= b_j, j != k} ∪ {a_k.x <= b_k + 1};
// essential iff the optimum exceeds b_k (+ tol). Throws EmptyRegionError when
// the relaxed system is infeasible.
bool is_essential(std::span<const Halfspace> constraints, std::size_t k, double tol = kDefaultTol.optimality);

// Minimal halfspace set defining the same region (box kept as context), via
// Clarkson's ray shooting from the Chebyshev center. Halfspace order is
// preserved. Throws DegeneratePolytopeError if the region has no interior.
HPolytope remove_redundant(const HPolytope& p, const Tolerances& tol = kDefaultTol);

// Mean of the V-representation vertices; std::nullopt when empty.
std::optional<Eigen::VectorXd> centroid(const HPolytope& p, const Tolerances& tol = kDefaultTol);

// Two halfspaces describe the same hyperplane up to non-zero scaling. Sets
// `same_orientation` when the scale factor is positive.
bool same_hyperplane(const Halfspace& a, const Halfspace& b, double tol, bool* same_orientation = nullptr);

}  // namespace ikf::geom
