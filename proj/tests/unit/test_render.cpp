#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include "ikf/app/render.hpp"
#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/rules/extract.hpp"
#include "ikf/shepherd/task.hpp"
#include "support/oracles.hpp"

using namespace ikf;
using namespace ikf::app;

namespace {

rules::RuleSet whole_box(const geom::Box& box) {
  rules::RuleSet rs;
  rs.state_box = box;
  rules::DecisionRule r;
  r.region.box = box;
  rs.rules.push_back(r);
  return rs;
}

// Vertices of the slice found in the full space: region rows, box rows and
// each fixed coordinate as a pair of opposite rows, then projected.
std::vector<Eigen::VectorXd> oracle_slice(const geom::HPolytope& p, const SliceSpec& s) {
  auto rows = p.halfspaces;
  for (const auto& h : p.box.halfspaces()) rows.push_back(h);
  const auto d = p.box.dim();
  for (const auto& [k, v] : s.fixed) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(d, k);
    rows.push_back({e, v});
    rows.push_back({-e, -v});
  }
  std::vector<Eigen::VectorXd> out;
  for (const auto& x : testing::brute_force_vertices(rows, d, 1e-9)) out.push_back(Eigen::Vector2d(x[s.x_dim], x[s.y_dim]));
  testing::dedup_points(out, 1e-7);
  return out;
}

double area(const std::vector<Eigen::VectorXd>& pts) {
  // hull area via the polygon routine on the oracle points' bounding hull
  if (pts.size() < 3) return 0.0;
  std::vector<Eigen::VectorXd> hull = pts;
  Eigen::Vector2d mid = Eigen::Vector2d::Zero();
  for (const auto& p : hull) mid += p;
  mid /= static_cast<double>(hull.size());
  std::sort(hull.begin(), hull.end(), [&](const auto& a, const auto& b) {
    return std::atan2(a[1] - mid.y(), a[0] - mid.x()) < std::atan2(b[1] - mid.y(), b[0] - mid.x());
  });
  double a = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& p = hull[i];
    const auto& q = hull[(i + 1) % hull.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return std::abs(a) / 2;
}

}  // namespace

TEST_CASE("single rule over the whole slice fills the axes box") {
  const auto box = shepherd::feature_box();
  const auto out = render_polytopes(whole_box(box), shepherd_slice(150));
  REQUIRE(out.polygons.size() == 1);
  std::vector<Eigen::VectorXd> got, want;
  for (const auto& v : out.polygons[0].vertices) got.push_back(v);
  for (double x : {-1.0, 1.0})
    for (double y : {-1.0, 1.0}) want.push_back(Eigen::Vector2d(x, y));
  CHECK(testing::same_point_set(got, want, 1e-9));
  CHECK(out.polygons[0].fill == "#ffffff");
  CHECK(out.svg.find("<polygon") != std::string::npos);
}

TEST_CASE("one maximally weak polytope is the unique pure red polygon") {
  const auto box = geom::Box::cube(2, -1, 1);
  rules::RuleSet rs;
  rs.state_box = box;
  for (int i = 0; i < 3; ++i) {
    rules::DecisionRule r;
    r.region.box = box;
    r.region.halfspaces = {{Eigen::Vector2d(1, 0), -1 + 2.0 * (i + 1) / 3}, {Eigen::Vector2d(-1, 0), 1 - 2.0 * i / 3}};
    r.weakness_degree = i == 1 ? 1.0 : 0.2 * i;
    r.decision = i;
    rs.rules.push_back(r);
  }
  SliceSpec s;
  s.x_dim = 0;
  s.y_dim = 1;
  const auto out = render_polytopes(rs, s);
  REQUIRE(out.polygons.size() == 3);
  int red = 0;
  for (const auto& p : out.polygons) red += p.fill == "#ff0000";
  CHECK(red == 1);
  CHECK(out.polygons[1].fill == "#ff0000");
  CHECK(std::count(out.svg.begin(), out.svg.end(), '\n') > 5);
}

TEST_CASE("shading is monotone in weakness degree") {
  int last = 256;
  for (int i = 0; i <= 100; ++i) {
    const std::string c = shading_colour(i / 100.0);
    CHECK(c.substr(0, 3) == "#ff");
    const int g = std::stoi(c.substr(3, 2), nullptr, 16);
    CHECK(c.substr(3, 2) == c.substr(5, 2));
    CHECK(g <= last);
    last = g;
  }
  CHECK(shading_colour(0.0) == "#ffffff");
  CHECK(shading_colour(1.0) == "#ff0000");
  CHECK(shading_colour(7.0) == "#ff0000");
}

TEST_CASE("rendered polygons equal vertex enumeration of the sliced rules") {
  const auto box = shepherd::feature_box();
  const SliceSpec s = shepherd_slice(150);
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto net = nn::Mlp::random(std::vector<Eigen::Index>{4, 6, 5}, nn::Activation::linear, seed, 1.0);
    const auto rs = rules::extract_rules(net, box);
    const auto out = render_polytopes(rs, s);
    std::size_t k = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto want = oracle_slice(rs.rules[i].region, s);
      if (k < out.polygons.size() && out.polygons[k].rule == i) {
        std::vector<Eigen::VectorXd> got;
        for (const auto& v : out.polygons[k].vertices) got.push_back(v);
        CHECK(testing::same_point_set(got, want, 1e-6));
        CHECK(out.polygons[k].decision == rs.rules[i].decision);
        ++k;
        ++compared;
      } else {
        CHECK(area(want) < 1e-9);
      }
    }
    CHECK(k == out.polygons.size());
  }
  CHECK(compared > 10);
}

TEST_CASE("slice edge cases") {
  const auto box = shepherd::feature_box();
  SliceSpec outside = shepherd_slice(150, 400.0, 20.0);
  const auto out = render_polytopes(whole_box(box), outside);
  CHECK(out.polygons.empty());
  CHECK(out.svg.find("empty slice") != std::string::npos);

  SliceSpec bad;
  bad.x_dim = 1;
  bad.y_dim = 1;
  CHECK_THROWS_AS(render_polytopes(whole_box(box), bad), ConfigError);
  bad.y_dim = 7;
  CHECK_THROWS_AS(render_polytopes(whole_box(box), bad), DimensionError);
  RenderOptions opt;
  opt.shading = {0.1, 0.2};
  CHECK_THROWS_AS(render_polytopes(whole_box(box), shepherd_slice(150), opt), DimensionError);

  // identical input gives identical bytes
  CHECK(render_polytopes(whole_box(box), shepherd_slice(150)).svg == render_polytopes(whole_box(box), shepherd_slice(150)).svg);
}

TEST_CASE("curve plots cover the data and csv curves average groups") {
  CurveSeries a{"a", {1, 2, 3}, {0.5, -2.0, 4.0}}, b{"b", {0, 10}, {1.0, 1.0}};
  const auto p = plot_curves({a, b});
  CHECK(p.x_min <= 0.0);
  CHECK(p.x_max >= 10.0);
  CHECK(p.y_min <= -2.0);
  CHECK(p.y_max >= 4.0);
  CHECK(p.svg.find("data-series=\"b\"") != std::string::npos);
  CHECK_THROWS_AS(plot_curves({CurveSeries{"x", {1}, {}}}), DimensionError);

  const auto path = std::filesystem::temp_directory_path() / "ikf_curve_in.csv";
  {
    std::ofstream f(path);
    f << "arm,seed,epoch,loss\nu,0,1,1.0\nu,1,1,3.0\nu,0,2,0.5\nv,0,1,7\nv,0,2,nan-ish\n";
  }
  const auto cs = curves_from_csv(path, "epoch", "loss", "arm");
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].name == "u");
  CHECK(cs[0].y == std::vector<double>{2.0, 0.5});
  CHECK(cs[1].x == std::vector<double>{1.0});
  CHECK_THROWS_AS(curves_from_csv(path, "epoch", "accuracy"), ParseError);
  std::filesystem::remove(path);
}
