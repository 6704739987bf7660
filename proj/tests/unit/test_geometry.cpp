#include <doctest.h>

#include <cmath>

#include "ikf/common/error.hpp"
#include "ikf/geom/io.hpp"
#include "ikf/geom/lp.hpp"
#include "ikf/geom/ops.hpp"
#include "support/oracles.hpp"

using namespace ikf;
using namespace ikf::geom;
using ikf::testing::brute_force_vertices;
using ikf::testing::random_point;
using ikf::testing::random_polytope;
using ikf::testing::same_point_set;

namespace {

Halfspace hs(std::initializer_list<double> a, double b) {
  Eigen::VectorXd n(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (double v : a) n[i++] = v;
  return {n, b};
}

HPolytope rect(double x0, double x1, double y0, double y1, double box_lo = -10, double box_hi = 10) {
  return {{hs({1, 0}, x1), hs({-1, 0}, -x0), hs({0, 1}, y1), hs({0, -1}, -y0)}, Box::cube(2, box_lo, box_hi)};
}

std::vector<Eigen::VectorXd> pts(std::initializer_list<std::pair<double, double>> ps) {
  std::vector<Eigen::VectorXd> out;
  for (auto [x, y] : ps) out.push_back(Eigen::Vector2d(x, y));
  return out;
}

// Drop-one oracle: constraint k is essential iff maximizing a_k over all other
// constraints (and the box) exceeds b_k.
std::vector<std::size_t> drop_one_essential(const HPolytope& p) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < p.halfspaces.size(); ++k) {
    std::vector<Halfspace> rows = p.box.halfspaces();
    for (std::size_t j = 0; j < p.halfspaces.size(); ++j)
      if (j != k) rows.push_back(p.halfspaces[j]);
    const auto lp = solve_lp(p.halfspaces[k].normal, rows);
    REQUIRE(lp.status == LpStatus::optimal);
    if (lp.objective > p.halfspaces[k].offset + 1e-7 * std::max(1.0, p.halfspaces[k].normal.norm())) out.push_back(k);
  }
  return out;
}

}  // namespace

TEST_CASE("solve_lp: small cases") {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(1, 1.0);
  std::vector<Halfspace> rows{hs({1}, 2), hs({-1}, 0)};
  auto r = solve_lp(c, rows);
  REQUIRE(r.status == LpStatus::optimal);
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.objective == doctest::Approx(2.0));

  rows = {hs({1}, 1), hs({-1}, -3)};
  CHECK(solve_lp(c, rows).status == LpStatus::infeasible);

  rows = {hs({-1}, 0)};
  CHECK(solve_lp(c, rows).status == LpStatus::unbounded);
}

TEST_CASE("solve_lp: random 3-D LPs match brute-force vertex enumeration") {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const int extra = 1 + static_cast<int>(uniform_index(rng, 4));
    auto p = random_polytope(rng, 3, extra);
    const auto rows = p.all_constraints();  // <= 10 constraints
    Eigen::VectorXd c(3);
    for (int i = 0; i < 3; ++i) c[i] = uniform(rng, -1, 1);
    const auto verts = brute_force_vertices(rows, 3);
    REQUIRE(!verts.empty());
    double best = -1e300;
    for (const auto& v : verts) best = std::max(best, c.dot(v));
    const auto r = solve_lp(c, rows);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(std::abs(r.objective - best) < 1e-6);
  }
}

TEST_CASE("h_to_v: unit square and triangle") {
  auto sq = rect(0, 1, 0, 1);
  auto v = h_to_v(sq);
  REQUIRE(v);
  CHECK(same_point_set(v->vertices, pts({{0, 0}, {1, 0}, {0, 1}, {1, 1}}), 1e-9));

  HPolytope tri{{hs({-1, 0}, 0), hs({0, -1}, 0), hs({1, 1}, 1)}, Box::cube(2, -5, 5)};
  v = h_to_v(tri);
  REQUIRE(v);
  CHECK(same_point_set(v->vertices, pts({{0, 0}, {1, 0}, {0, 1}}), 1e-9));
}

TEST_CASE("h_to_v: infeasible input signals an empty region") {
  HPolytope p{{hs({1, 0}, 0), hs({-1, 0}, -1)}, Box::cube(2, -5, 5)};
  CHECK_FALSE(h_to_v(p).has_value());
  CHECK_FALSE(centroid(p).has_value());
  CHECK_FALSE(chebyshev_center(p).has_value());
}

TEST_CASE("h_to_v: random 4-D polytopes match combinatorial enumeration") {
  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = random_polytope(rng, 4, 1 + static_cast<int>(uniform_index(rng, 12)));
    const auto v = h_to_v(p);
    REQUIRE(v);
    CHECK(same_point_set(v->vertices, brute_force_vertices(p.all_constraints(), 4), 1e-6));
  }
}

TEST_CASE("h_to_v round trip: hull reconstruction gives the same region") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 2 + trial % 2;
    const auto p = random_polytope(rng, d, 6);
    const auto v = h_to_v(p);
    REQUIRE(v);
    HPolytope hull{ikf::testing::brute_force_hull(v->vertices, d), Box::cube(d, -5, 5)};
    int disagree = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto x = random_point(rng, p.box);
      const bool a = contains(p, x, false, 1e-6);
      const bool b = contains(hull, x, false, 1e-6);
      if (a != b) ++disagree;
    }
    CHECK(disagree == 0);
  }
}

TEST_CASE("contains: strict vs non-strict at the boundary") {
  const auto sq = rect(0, 1, 0, 1);
  CHECK(contains(sq, Eigen::Vector2d(0.5, 0.5), true, 1e-7));
  CHECK_FALSE(contains(sq, Eigen::Vector2d(1, 0.5), true, 1e-7));
  CHECK(contains(sq, Eigen::Vector2d(1, 0.5), false, 1e-7));
  CHECK_FALSE(contains(sq, Eigen::Vector2d(1.1, 0.5), false, 1e-7));
}

TEST_CASE("contains agrees with direct inequality evaluation") {
  Rng rng(8);
  const auto p = random_polytope(rng, 3, 8);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_point(rng, Box::cube(3, -1.2, 1.2));
    bool direct = true;
    for (const auto& h : p.all_constraints()) direct = direct && (h.normal.dot(x) <= h.offset + 1e-7);
    CHECK(contains(p, x, false, 1e-7) == direct);
  }
}

TEST_CASE("polytopes_intersect: squares and the plus-sign pair") {
  CHECK(polytopes_intersect(rect(0, 1, 0, 1), rect(0.5, 1.5, 0.5, 1.5)));
  CHECK_FALSE(polytopes_intersect(rect(0, 1, 0, 1), rect(2, 3, 2, 3)));
  CHECK_FALSE(polytopes_intersect(rect(0, 1, 0, 1), rect(1, 2, 0, 1)));  // shared edge only

  const auto a = rect(0, 3, 1, 2);
  const auto b = rect(1, 2, 0, 3);
  const auto va = h_to_v(a);
  const auto vb = h_to_v(b);
  REQUIRE(va);
  REQUIRE(vb);
  CHECK_FALSE(vertex_containment_test(a, b, *va, *vb));
  // Independent check: (1.5, 1.5) lies strictly inside both.
  CHECK(contains(a, Eigen::Vector2d(1.5, 1.5), true, 1e-7));
  CHECK(contains(b, Eigen::Vector2d(1.5, 1.5), true, 1e-7));
  CHECK(polytopes_intersect(a, b));
  CHECK(polytopes_intersect(a, b, *va, *vb));
}

TEST_CASE("polytopes_intersect is symmetric and reflexive") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    auto p = random_polytope(rng, 2, 4);
    auto q = random_polytope(rng, 2, 4);
    // shift q so that some pairs miss each other
    const Eigen::Vector2d shift(uniform(rng, -1, 1), uniform(rng, -1, 1));
    for (auto& h : q.halfspaces) h.offset += h.normal.dot(shift);
    CHECK(polytopes_intersect(p, q) == polytopes_intersect(q, p));
    CHECK(polytopes_intersect(p, p));
  }
}

TEST_CASE("is_essential: square with a redundant cut") {
  auto sq = rect(0, 1, 0, 1);
  std::vector<Halfspace> rows = sq.halfspaces;
  rows.push_back(hs({1, 0}, 2));
  CHECK_FALSE(is_essential(rows, 4));
  CHECK(is_essential(rows, 0));
}

TEST_CASE("is_essential agrees with a rejection-sampling witness oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_polytope(rng, 2, 6);
    auto rows = p.all_constraints();
    for (std::size_t k = 0; k < p.halfspaces.size(); ++k) {
      const bool essential = is_essential(rows, k);
      // A witness satisfies every other constraint but violates k.
      bool witness = false;
      for (int i = 0; i < 20000 && !witness; ++i) {
        const auto x = random_point(rng, p.box);
        bool others = true;
        for (std::size_t j = 0; j < rows.size(); ++j)
          if (j != k && rows[j].normal.dot(x) > rows[j].offset) others = false;
        witness = others && rows[k].normal.dot(x) > rows[k].offset;
      }
      if (witness) CHECK(essential);
      if (!essential) CHECK_FALSE(witness);
    }
  }
}

TEST_CASE("remove_redundant: parallel cuts and idempotence") {
  auto sq = rect(0, 1, 0, 1);
  sq.halfspaces.push_back(hs({1, 0}, 2));
  sq.halfspaces.push_back(hs({0, 1}, 1.5));
  sq.halfspaces.push_back(hs({-2, 0}, 3));
  const auto m = remove_redundant(sq);
  CHECK(m.halfspaces.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(m.halfspaces[j].normal == sq.halfspaces[j].normal);

  HPolytope tri{{hs({-1, 0}, 0), hs({0, -1}, 0), hs({1, 1}, 1)}, Box::cube(2, -5, 5)};
  const auto t = remove_redundant(tri);
  REQUIRE(t.halfspaces.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(t.halfspaces[j].offset == tri.halfspaces[j].offset);
}

TEST_CASE("remove_redundant: degenerate region rejected") {
  HPolytope seg{{hs({0, 1}, 0), hs({0, -1}, 0)}, Box::cube(2, -1, 1)};
  CHECK_THROWS_AS(remove_redundant(seg), DegeneratePolytopeError);
}

TEST_CASE("remove_redundant matches the drop-one oracle and preserves membership") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index d = 2 + trial % 3;
    const auto p = random_polytope(rng, d, 3 + static_cast<int>(uniform_index(rng, 10)));
    const auto m = remove_redundant(p);
    const auto oracle = drop_one_essential(p);
    REQUIRE(m.halfspaces.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(m.halfspaces[i].offset == p.halfspaces[oracle[i]].offset);
    for (int i = 0; i < 2000; ++i) {
      const auto x = random_point(rng, p.box);
      CHECK(contains(p, x, false, 0.0) == contains(m, x, false, 0.0));
    }
  }
}

TEST_CASE("chebyshev_center: square, segment, random feasibility") {
  auto ball = chebyshev_center(rect(0, 1, 0, 1));
  REQUIRE(ball);
  CHECK(ball->center[0] == doctest::Approx(0.5));
  CHECK(ball->center[1] == doctest::Approx(0.5));
  CHECK(ball->radius == doctest::Approx(0.5));

  HPolytope seg{{hs({1, 0}, 1), hs({-1, 0}, 0), hs({0, 1}, 0), hs({0, -1}, 0)}, Box::cube(2, -5, 5)};
  ball = chebyshev_center(seg);
  REQUIRE(ball);
  CHECK(ball->radius == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_polytope(rng, 3, 6);
    ball = chebyshev_center(p);
    REQUIRE(ball);
    double min_slack = 1e300;
    for (const auto& h : p.all_constraints()) min_slack = std::min(min_slack, h.normalized().slack(ball->center));
    CHECK(min_slack >= ball->radius - 1e-9);
    CHECK(std::abs(min_slack - ball->radius) < 1e-6);
  }
}

TEST_CASE("centroid is the vertex mean") {
  auto c = centroid(rect(0, 1, 0, 1));
  REQUIRE(c);
  CHECK((*c - Eigen::Vector2d(0.5, 0.5)).norm() < 1e-12);
  HPolytope tri{{hs({-1, 0}, 0), hs({0, -1}, 0), hs({1, 1}, 1)}, Box::cube(2, -5, 5)};
  c = centroid(tri);
  REQUIRE(c);
  CHECK((*c - Eigen::Vector2d(1.0 / 3, 1.0 / 3)).norm() < 1e-12);

  Rng rng(6);
  const auto p = random_polytope(rng, 3, 7);
  const auto verts = brute_force_vertices(p.all_constraints(), 3);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (const auto& v : verts) mean += v;
  mean /= static_cast<double>(verts.size());
  c = centroid(p);
  REQUIRE(c);
  CHECK((*c - mean).norm() < 1e-6);
}

TEST_CASE("polytope file round trip and field errors") {
  Rng rng(3);
  const auto p = random_polytope(rng, 3, 5);
  const auto q = polytope_from_json(polytope_to_json(p));
  REQUIRE(q.halfspaces.size() == p.halfspaces.size());
  for (std::size_t j = 0; j < p.halfspaces.size(); ++j) {
    CHECK(q.halfspaces[j].normal == p.halfspaces[j].normal);
    CHECK(q.halfspaces[j].offset == p.halfspaces[j].offset);
  }
  auto bad = polytope_to_json(p);
  bad["halfspaces"][2]["a"] = std::vector<double>{1.0, 2.0};
  CHECK_THROWS_WITH_AS(polytope_from_json(bad), doctest::Contains("halfspaces[2].a"), ParseError);
}
