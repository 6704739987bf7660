#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "ikf/baselines/composite.hpp"
#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/rl/dqn.hpp"
#include "support/chain_env.hpp"
#include "support/gradcheck.hpp"

using namespace ikf;
using namespace ikf::baselines;

namespace {

const std::vector<Eigen::Index> kWidths{4, 6, 5};

nn::Mlp source(std::uint64_t seed) { return nn::Mlp::random(kWidths, nn::Activation::linear, seed, 0.7); }

Eigen::MatrixXd random_states(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd s(4, n);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = uniform(rng, -1, 1);
  return s;
}

nn::Mlp zeroed(nn::Mlp net) {
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    net.mutable_layer(k).weights.setZero();
    net.mutable_layer(k).bias.setZero();
  }
  return net;
}

std::vector<double> flat(const nn::Mlp& net) {
  std::vector<double> out;
  for (auto s : net.parameter_spans()) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

TEST_CASE("scratch networks") {
  const std::vector<Eigen::Index> w{4, 4, 5};
  const auto a = build_scratch(w, 1), b = build_scratch(w, 2);
  CHECK(a.layer(0).out_dim() == 4);
  CHECK_FALSE(a == b);
  CHECK(rl::MlpQ(a).q_values(random_states(3, 0)).rows() == 5);
  CHECK(widths_of(a) == w);
}

TEST_CASE("a2t selection and averaging limits") {
  const auto s0 = source(1), s1 = source(2), base = source(3);
  const auto states = random_states(6, 4);

  nn::Mlp att = zeroed(nn::Mlp::random(std::vector<Eigen::Index>{4, 6, 3}, nn::Activation::linear, 9));
  att.mutable_layer(1).bias << 60.0, 0.0, 0.0;
  A2tQ pick({s0, s1}, base, att);
  CHECK(pick.q_values(states).isApprox(s0.forward_batch(states), 1e-12));

  A2tQ uniform({s0, s1}, base, zeroed(att));
  const Eigen::MatrixXd mean = (s0.forward_batch(states) + s1.forward_batch(states) + base.forward_batch(states)) / 3.0;
  CHECK(uniform.q_values(states).isApprox(mean, 1e-12));
  const auto w = uniform.attention_weights(states);
  CHECK(w.colwise().sum().isApprox(Eigen::RowVectorXd::Ones(6)));

  CHECK_THROWS_AS(A2tQ({s0, nn::Mlp::random(std::vector<Eigen::Index>{4, 6, 4}, nn::Activation::linear, 1)}, base, att),
                  DimensionError);
  CHECK_THROWS_AS(A2tQ({s0}, base, att), DimensionError);
}

TEST_CASE("a2t gradients and frozen sources") {
  const auto s0 = source(1), s1 = source(2);
  auto q = build_a2t(s0, s1, 7);
  const auto states = random_states(5, 8);
  const Eigen::MatrixXd dq = random_states(5, 9).topRows(4).colwise().sum().replicate(5, 1) * 0.3;
  CHECK(test::max_gradient_error(*q, states, dq) < 1e-4);

  // the source is wired in: perturbing one of its weights moves the output
  std::vector<nn::Mlp> probe_sources = q->sources();
  probe_sources[0].mutable_layer(1).bias[2] += 1e-3;
  A2tQ probe(probe_sources, q->base(), q->attention());
  CHECK((probe.q_values(states) - q->q_values(states)).norm() > 0.0);
  // but it is not a trainable parameter
  std::size_t n_params = 0;
  for (auto s : q->trainable_parameters()) n_params += s.size();
  std::size_t expected = 0;
  for (auto s : q->base().parameter_spans()) expected += s.size();
  for (auto s : q->attention().parameter_spans()) expected += s.size();
  CHECK(n_params == expected);
}

TEST_CASE("multipolar identities and element-wise aggregation") {
  const auto s0 = source(1), s1 = source(2);
  const auto states = random_states(4, 5);
  MultipolarQ sum({s0, s1}, Eigen::MatrixXd::Ones(2, 5), zeroed(source(3)));
  CHECK(sum.q_values(states).isApprox(s0.forward_batch(states) + s1.forward_batch(states), 1e-12));
  const auto aux = source(3);
  MultipolarQ only_aux({s0, s1}, Eigen::MatrixXd::Zero(2, 5), aux);
  CHECK(only_aux.q_values(states).isApprox(aux.forward_batch(states), 1e-12));

  MultipolarQ m({s0, s1}, Eigen::MatrixXd::Ones(2, 5), aux);
  const Eigen::MatrixXd before = m.q_values(states);
  m.aggregation()(1, 3) += 0.25;
  const Eigen::MatrixXd delta = m.q_values(states) - before;
  const Eigen::MatrixXd src1 = s1.forward_batch(states);
  for (Eigen::Index a = 0; a < 5; ++a)
    for (Eigen::Index b = 0; b < 4; ++b)
      CHECK(delta(a, b) == doctest::Approx(a == 3 ? 0.25 * src1(3, b) : 0.0));

  const Eigen::MatrixXd dq = random_states(4, 6).topRows(4).colwise().sum().replicate(5, 1);
  auto built = build_multipolar(s0, s1, 3);
  CHECK(built->aggregation() == Eigen::MatrixXd::Ones(2, 5));
  CHECK(test::max_gradient_error(*built, states, dq) < 1e-4);
  CHECK_THROWS_AS(MultipolarQ({s0, s1}, Eigen::MatrixXd::Ones(3, 5), aux), DimensionError);
}

TEST_CASE("sources are byte-identical after training") {
  const std::vector<Eigen::Index> w{2, 5, 2};
  const auto s0 = nn::Mlp::random(w, nn::Activation::linear, 1, 0.5);
  const auto s1 = nn::Mlp::random(w, nn::Activation::linear, 2, 0.5);
  const auto b0 = flat(s0), b1 = flat(s1);
  rl::DqnConfig cfg;
  cfg.episodes = 15;
  cfg.warmup_steps = 40;
  test::ChainEnv env;
  for (int kind = 0; kind < 2; ++kind) {
    std::unique_ptr<rl::QFunction> q;
    if (kind == 0)
      q = build_a2t(s0, s1, 4);
    else
      q = build_multipolar(s0, s1, 4);
    const auto out = rl::train_ddqn(env, std::move(q), cfg);
    const auto& srcs = kind == 0 ? dynamic_cast<const A2tQ&>(*out.policy).sources()
                                 : dynamic_cast<const MultipolarQ&>(*out.policy).sources();
    const auto a0 = flat(srcs[0]), a1 = flat(srcs[1]);
    CHECK(std::memcmp(a0.data(), b0.data(), b0.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a1.data(), b1.data(), b1.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("policy files round trip with wiring") {
  const auto s0 = source(1), s1 = source(2);
  const auto states = random_states(3, 1);
  const auto dir = std::filesystem::temp_directory_path();
  std::vector<std::unique_ptr<rl::QFunction>> qs;
  qs.push_back(std::make_unique<rl::MlpQ>(source(5)));
  qs.push_back(build_a2t(s0, s1, 2));
  auto mp = build_multipolar(s0, s1, 3);
  mp->aggregation()(0, 1) = -0.5;
  qs.push_back(std::move(mp));
  for (const auto& q : qs) {
    const auto path = dir / ("ikf_policy_" + q->kind() + ".json");
    save_policy(*q, path);
    const auto back = load_policy(path);
    CHECK(back->kind() == q->kind());
    CHECK(back->q_values(states) == q->q_values(states));
    std::filesystem::remove(path);
  }
  nlohmann::json bad = qs[2]->to_json();
  bad["aggregation"][1][2] = "x";
  try {
    policy_from_json(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.field() == "policy.aggregation[1][2]");
  }
  CHECK_THROWS_AS(policy_from_json({{"kind", "dueling"}}), ParseError);
}
