#include <doctest.h>

#include <cmath>
#include <set>

#include <omp.h>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/geom/ops.hpp"
#include "ikf/nn/train.hpp"
#include "ikf/rules/extract.hpp"
#include "ikf/rules/io.hpp"
#include "support/oracles.hpp"

using namespace ikf;
using namespace ikf::rules;

namespace {

const geom::Box kBox = geom::Box::cube(2, -10, 10);

int p1_truth(double x, double y) { return (2 * x + y + 2 < 0 && x + 2 * y + 3 < 0) ? 0 : 1; }

// relu(h1) + relu(h2) - tiny: negative only where both hyperplanes are.
nn::Mlp p1_net() {
  Eigen::MatrixXd w1(2, 2);
  w1 << 2, 1, 1, 2;
  Eigen::MatrixXd w2(1, 2);
  w2 << 1, 1;
  return nn::Mlp({{w1, Eigen::Vector2d(2, 3), nn::Activation::relu},
                  {w2, Eigen::VectorXd::Constant(1, -1e-10), nn::Activation::sigmoid}});
}

nn::Mlp trained_net(std::uint64_t seed, std::vector<Eigen::Index> widths) {
  Rng rng(seed);
  nn::LabeledDataset data{Eigen::MatrixXd(500, 2), Eigen::VectorXd(500)};
  for (int i = 0; i < 500; ++i) {
    const double x = uniform(rng, -10, 10), y = uniform(rng, -10, 10);
    data.inputs.row(i) << x, y;
    data.labels[i] = (x * x + y * y < 40) ? 1.0 : 0.0;
  }
  nn::TrainConfig cfg;
  cfg.epochs = 20;
  cfg.optimizer = nn::OptimizerKind::adam;
  cfg.seed = seed;
  return nn::train_supervised(nn::Mlp::random(widths, nn::Activation::sigmoid, seed, 0.5), data, cfg).net;
}

Eigen::VectorXd interior_sample(Rng& rng, const geom::HPolytope& p) {
  const auto ball = geom::chebyshev_center(p);
  REQUIRE(ball);
  Eigen::VectorXd u(p.dim());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = uniform(rng, -1, 1);
  u /= std::max(1.0, u.norm());
  return ball->center + 0.9 * ball->radius * u;
}

}  // namespace

TEST_CASE("extract: hand-built P1 net gives four patterns with P1 labels") {
  const auto rs = extract_rules(p1_net(), kBox);
  std::set<std::string> patterns;
  for (const auto& r : rs.rules) patterns.insert(pattern_to_string(r.pattern));
  CHECK(patterns == std::set<std::string>{"00", "01", "10", "11"});
  CHECK(rs.rules.size() == 4);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) {
      const double x = -10 + (i + 0.5) * 0.1, y = -10 + (j + 0.5) * 0.1;
      mismatches += evaluate_ruleset(rs, Eigen::Vector2d(x, y)) != p1_truth(x, y);
    }
  CHECK(mismatches == 0);
  CHECK(evaluate_ruleset(rs, Eigen::Vector2d(0, 0)) == 1);
  CHECK(evaluate_ruleset(rs, Eigen::Vector2d(-3, -3)) == 0);
}

TEST_CASE("extract: dead unit only appears switched off") {
  Eigen::MatrixXd w1(2, 2);
  w1 << 1, 0, 0, 1;
  Eigen::MatrixXd w2(1, 2);
  w2 << 1, 1;
  const nn::Mlp net({{w1, Eigen::Vector2d(-20, 0), nn::Activation::relu},
                     {w2, Eigen::VectorXd::Constant(1, -1), nn::Activation::sigmoid}});
  const auto rs = extract_rules(net, kBox);
  REQUIRE(!rs.rules.empty());
  for (const auto& r : rs.rules) CHECK(r.pattern[0][0] == 0);
}

TEST_CASE("extract: boundary point resolves to the lowest containing rule") {
  const auto rs = extract_rules(p1_net(), kBox);
  const Eigen::Vector2d x(0, -2);  // on h1 = 0
  std::size_t first = rs.rules.size();
  for (std::size_t i = 0; i < rs.rules.size() && first == rs.rules.size(); ++i)
    if (geom::contains(rs.rules[i].region, x, false, 0.0)) first = i;
  REQUIRE(first < rs.rules.size());
  CHECK(evaluate_ruleset(rs, x) == rs.rules[first].decision);
  CHECK(evaluate_ruleset(rs, x) == evaluate_ruleset(rs, x));
}

TEST_CASE("extract: exactness, partition and affine maps on trained and random nets") {
  Rng rng(7);
  std::vector<nn::Mlp> nets{trained_net(1, {2, 6, 1}), trained_net(2, {2, 4, 3, 1}),
                            nn::Mlp::random(std::vector<Eigen::Index>{2, 5, 4}, nn::Activation::linear, 3, 1.0),
                            nn::Mlp::random(std::vector<Eigen::Index>{3, 4, 3, 2}, nn::Activation::linear, 4, 1.0)};
  for (const auto& net : nets) {
    const geom::Box box = geom::Box::cube(net.input_dim(), -10, 10);
    const auto rs = extract_rules(net, box);
    CHECK(fidelity(net, rs, 20000, 11) == 1.0);

    // Partition: every sample lies in exactly one region interior.
    std::vector<double> hits(rs.rules.size(), 0.0);
    int overlaps = 0;
    const int n = 20000;
    for (int s = 0; s < n; ++s) {
      const auto x = ikf::testing::random_point(rng, box);
      int inside = 0;
      for (std::size_t i = 0; i < rs.rules.size(); ++i)
        if (geom::contains(rs.rules[i].region, x, true, 1e-9)) {
          ++inside;
          hits[i] += 1.0;
        }
      overlaps += inside > 1;
    }
    double total = 0.0;
    for (double h : hits) total += h;
    CHECK(overlaps == 0);
    CHECK(std::abs(total / n - 1.0) < 0.01);

    for (const auto& r : rs.rules)
      for (int k = 0; k < 10; ++k) {
        const auto x = interior_sample(rng, r.region);
        const Eigen::VectorXd direct = net.forward_pre_head(x);
        const Eigen::VectorXd affine = r.affine_out.apply(x);
        CHECK((direct - affine).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
        CHECK(nn::decision(net, x) == r.decision);
      }
  }
}

TEST_CASE("extract: parallel enumeration equals the serial reference") {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const auto net = nn::Mlp::random(std::vector<Eigen::Index>{2, 6, 4, 3}, nn::Activation::linear, seed, 1.0);
    const auto a = extract_rules(net, kBox);
    const auto b = extract_rules_serial(net, kBox);
    REQUIRE(a.rules.size() == b.rules.size());
    for (std::size_t i = 0; i < a.rules.size(); ++i) {
      CHECK(a.rules[i].pattern == b.rules[i].pattern);
      CHECK(a.rules[i].decision == b.rules[i].decision);
      REQUIRE(a.rules[i].region.halfspaces.size() == b.rules[i].region.halfspaces.size());
      for (std::size_t j = 0; j < a.rules[i].region.halfspaces.size(); ++j) {
        CHECK(a.rules[i].region.halfspaces[j].normal == b.rules[i].region.halfspaces[j].normal);
        CHECK(a.rules[i].region.halfspaces[j].offset == b.rules[i].region.halfspaces[j].offset);
      }
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("extract: budget refusal reports the pattern estimate") {
  const auto net = nn::Mlp::random(std::vector<Eigen::Index>{2, 25, 1}, nn::Activation::sigmoid, 1);
  try {
    extract_rules(net, kBox);
    FAIL("expected refusal");
  } catch (const BudgetExceededError& e) {
    CHECK(e.estimated_patterns() == doctest::Approx(1 + 25 + 300));
  }
  ExtractConfig cfg;
  cfg.max_hidden_units = 30;
  CHECK_NOTHROW(extract_rules(net, kBox, cfg));
}

TEST_CASE("evaluate: uncovered point raises a coverage violation") {
  auto rs = extract_rules(p1_net(), kBox);
  RuleSet only_zero = rs;
  std::erase_if(only_zero.rules, [](const DecisionRule& r) { return r.decision == 1; });
  CHECK_THROWS_AS(evaluate_ruleset(only_zero, Eigen::Vector2d(5, 5)), CoverageViolationError);
}

TEST_CASE("fidelity: flipped rule drops by its volume fraction") {
  const auto net = trained_net(3, {2, 5, 1});
  auto rs = extract_rules(net, kBox);
  REQUIRE(rs.rules.size() > 1);
  // Pick the largest region by Monte-Carlo volume.
  Rng rng(99);
  std::vector<int> hits(rs.rules.size(), 0);
  const int n = 50000;
  for (int s = 0; s < n; ++s) {
    const auto idx = locate_rule(rs, ikf::testing::random_point(rng, kBox));
    REQUIRE(idx);
    ++hits[*idx];
  }
  const auto big = static_cast<std::size_t>(std::max_element(hits.begin(), hits.end()) - hits.begin());
  rs.rules[big].decision = 1 - rs.rules[big].decision;
  const double f = fidelity(net, rs, 50000, 4);
  CHECK(std::abs((1.0 - f) - static_cast<double>(hits[big]) / n) < 0.01);
  CHECK(fidelity(net, rs, 5000, 4) == fidelity_serial(net, rs, 5000, 4));
}

TEST_CASE("fidelity: rules of another net are reproducible per seed") {
  const auto a = nn::Mlp::random(std::vector<Eigen::Index>{2, 4, 1}, nn::Activation::sigmoid, 1, 1.0);
  const auto b = nn::Mlp::random(std::vector<Eigen::Index>{2, 4, 1}, nn::Activation::sigmoid, 2, 1.0);
  const auto rs = extract_rules(b, kBox);
  const double f1 = fidelity(a, rs, 3000, 8);
  CHECK(f1 >= 0.0);
  CHECK(f1 <= 1.0);
  CHECK(f1 == fidelity(a, rs, 3000, 8));
  CHECK_THROWS_AS(fidelity(a, rs, 0, 8), ConfigError);
}

TEST_CASE("rule set file round trip") {
  auto rs = extract_rules(trained_net(4, {2, 3, 1}), kBox);
  rs.rules[0].score = 0.75;
  rs.rules[0].weak = true;
  rs.rules[0].weakness_degree = 0.5;
  const auto back = ruleset_from_json(ruleset_to_json(rs));
  REQUIRE(back.rules.size() == rs.rules.size());
  CHECK(back.source == rs.source);
  for (std::size_t i = 0; i < rs.rules.size(); ++i) {
    CHECK(back.rules[i].decision == rs.rules[i].decision);
    CHECK(back.rules[i].pattern == rs.rules[i].pattern);
    CHECK(back.rules[i].affine_out.M == rs.rules[i].affine_out.M);
    CHECK(back.rules[i].affine_out.c == rs.rules[i].affine_out.c);
    CHECK(back.rules[i].region.halfspaces.size() == rs.rules[i].region.halfspaces.size());
  }
  CHECK(back.rules[0].score == 0.75);
  CHECK(back.rules[0].weak);
  CHECK_FALSE(back.rules[1].score.has_value());

  auto j = ruleset_to_json(rs);
  j["rules"][1]["affine_out"]["M"][0] = std::vector<double>{1.0};
  CHECK_THROWS_WITH_AS(ruleset_from_json(j), doctest::Contains("rules[1].affine_out.M[0]"), ParseError);
}

TEST_CASE("extract: unit cuts of a one-layer net are the hidden hyperplanes") {
  const auto net = trained_net(5, {2, 4, 1});
  const auto rs = extract_rules(net, kBox);
  const auto& L = net.layer(0);
  for (const auto& r : rs.rules) {
    REQUIRE(r.kinds.size() == r.region.halfspaces.size());
    for (std::size_t j = 0; j < r.kinds.size(); ++j) {
      if (!is_unit(r.kinds[j])) continue;
      bool found = false;
      for (Eigen::Index u = 0; u < L.weights.rows(); ++u) {
        bool same_side = false;
        if (geom::same_hyperplane(r.region.halfspaces[j], geom::Halfspace{L.weights.row(u).transpose(), -L.bias[u]},
                                  1e-7, &same_side))
          found = found || same_side == (r.kinds[j] == CutKind::unit_off);
      }
      CHECK(found);
    }
  }
}
