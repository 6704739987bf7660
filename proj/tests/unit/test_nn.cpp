#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/nn/mlp.hpp"
#include "ikf/nn/model_io.hpp"
#include "ikf/nn/train.hpp"

using namespace ikf;
using namespace ikf::nn;

namespace {

Layer make_layer(Eigen::MatrixXd w, Eigen::VectorXd b, Activation a) { return {std::move(w), std::move(b), a}; }

Mlp random_net(std::vector<Eigen::Index> widths, Activation head, std::uint64_t seed, double scale = 1.0) {
  return Mlp::random(widths, head, seed, scale);
}

}  // namespace

TEST_CASE("forward: identity linear layer") {
  Mlp net({make_layer(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Activation::linear)});
  const Eigen::VectorXd out = net.forward(Eigen::Vector2d(3, -1));
  CHECK(out[0] == 3.0);
  CHECK(out[1] == -1.0);
}

TEST_CASE("forward: relu clamps negative pre-activation") {
  Eigen::MatrixXd w(1, 2);
  w << 1, 0;
  Mlp net({make_layer(w, Eigen::VectorXd::Constant(1, -1.0), Activation::relu),
           make_layer(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), Activation::linear)});
  CHECK(net.forward(Eigen::Vector2d(0.5, 9))[0] == 0.0);
  CHECK(net.activation_pattern(Eigen::Vector2d(0.5, 9))[0][0] == 0);
}

TEST_CASE("forward: two-layer composition with sigmoid head") {
  // h1 = relu(2x + y + 2); head = sigmoid(w * h1 - 1). At the origin h1 = 2.
  Eigen::MatrixXd w1(1, 2);
  w1 << 2, 1;
  for (double head_w : {1.0, -1.0}) {
    Mlp net({make_layer(w1, Eigen::VectorXd::Constant(1, 2.0), Activation::relu),
             make_layer(Eigen::MatrixXd::Constant(1, 1, head_w), Eigen::VectorXd::Constant(1, -1.0),
                        Activation::sigmoid)});
    const double expected = 1.0 / (1.0 + std::exp(-(head_w * 2.0 - 1.0)));
    const double out = net.forward(Eigen::Vector2d::Zero())[0];
    CHECK(out == doctest::Approx(expected).epsilon(1e-15));
    CHECK((out > 0.5) == (head_w > 0));
  }
}

TEST_CASE("forward rejects wrong input dimension") {
  const auto net = random_net({2, 3, 1}, Activation::sigmoid, 1);
  CHECK_THROWS_AS(net.forward(Eigen::Vector3d::Zero()), DimensionError);
  CHECK_THROWS_AS(net.activation_pattern(Eigen::Vector3d::Zero()), DimensionError);
}

TEST_CASE("activation pattern: sign readout and tie rule") {
  Mlp net({make_layer(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Activation::relu),
           make_layer(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1), Activation::sigmoid)});
  auto p = net.activation_pattern(Eigen::Vector2d(1, -1));
  CHECK(p[0] == LayerPattern{1, 0});
  p = net.activation_pattern(Eigen::Vector2d(0, 2));
  CHECK(p[0] == LayerPattern{0, 1});  // exact zero is off
}

TEST_CASE("activation pattern matches independently computed pre-activation signs") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = random_net({3, 5, 4, 2}, Activation::linear, 100 + trial);
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = uniform(rng, -2, 2);
    const auto pattern = net.activation_pattern(x);
    // Direct dot products, layer by layer.
    std::vector<double> h(x.data(), x.data() + 3);
    for (std::size_t k = 0; k + 1 < net.num_layers(); ++k) {
      const auto& l = net.layer(k);
      std::vector<double> next(static_cast<std::size_t>(l.out_dim()));
      for (Eigen::Index r = 0; r < l.out_dim(); ++r) {
        double s = l.bias[r];
        for (Eigen::Index c = 0; c < l.in_dim(); ++c) s += l.weights(r, c) * h[static_cast<std::size_t>(c)];
        CHECK(pattern[k][static_cast<std::size_t>(r)] == (s > 0 ? 1 : 0));
        next[static_cast<std::size_t>(r)] = s > 0 ? s : 0;
      }
      h = next;
    }
  }
}

TEST_CASE("piecewise affine: midpoint of same-pattern points") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 2000 && checked < 200; ++trial) {
    const auto net = random_net({2, 4, 3, 1}, Activation::linear, 500 + trial % 10);
    Eigen::Vector2d a(uniform(rng, -1, 1), uniform(rng, -1, 1));
    Eigen::Vector2d b = a + Eigen::Vector2d(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05));
    const Eigen::Vector2d mid = 0.5 * (a + b);
    const auto pa = net.activation_pattern(a);
    if (pa != net.activation_pattern(b) || pa != net.activation_pattern(mid)) continue;
    const double expect = 0.5 * (net.forward(a)[0] + net.forward(b)[0]);
    CHECK(std::abs(net.forward(mid)[0] - expect) < 1e-9);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("gradient check against central finite differences") {
  Rng rng(3);
  for (Loss loss : {Loss::binary_cross_entropy, Loss::mean_squared_error}) {
    for (Activation head : {Activation::sigmoid, Activation::linear}) {
      if (loss == Loss::binary_cross_entropy && head != Activation::sigmoid) continue;
      auto net = random_net({3, 4, 3, 1}, head, 42, 0.8);
      Eigen::MatrixXd x(3, 6);
      Eigen::VectorXd y(6);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
      for (Eigen::Index i = 0; i < 6; ++i) y[i] = i % 2;
      const auto lg = loss_and_gradient(net, x, y, loss);
      const auto grads = lg.grad.spans();
      auto params = net.parameter_spans();
      const double h = 1e-5;
      for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].size(); ++i) {
          const double orig = params[b][i];
          params[b][i] = orig + h;
          const double up = loss_and_gradient(net, x, y, loss).loss;
          params[b][i] = orig - h;
          const double down = loss_and_gradient(net, x, y, loss).loss;
          params[b][i] = orig;
          const double fd = (up - down) / (2 * h);
          const double an = grads[b][i];
          const double rel = std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an));
          CHECK(rel < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("train_supervised: zero epochs returns network unchanged") {
  const auto net = random_net({2, 2, 1}, Activation::sigmoid, 5);
  LabeledDataset data{Eigen::MatrixXd::Random(10, 2), Eigen::VectorXd::Zero(10)};
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto res = train_supervised(net, data, cfg);
  CHECK(res.net == net);
  CHECK(res.loss_history.empty());
}

TEST_CASE("train_supervised: separable toy set reaches 0.99 training accuracy") {
  Rng rng(21);
  const int n = 400;
  LabeledDataset data{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    const double x = uniform(rng, -1, 1), y = uniform(rng, -1, 1);
    data.inputs.row(i) << x, y;
    if (std::abs(x - 0.5 * y - 0.1) < 0.05) {
      --i;
      continue;
    }
    data.labels[i] = (x - 0.5 * y - 0.1 > 0) ? 1.0 : 0.0;
  }
  // Brute-force oracle: some line through a grid of angles/offsets separates
  // the labels exactly, so perfect accuracy is attainable.
  bool separable = false;
  for (int ai = 0; ai < 720 && !separable; ++ai) {
    const double th = M_PI * ai / 360.0;
    for (int oi = -100; oi <= 100 && !separable; ++oi) {
      const double off = oi / 100.0;
      int ok = 0;
      for (int i = 0; i < n; ++i) {
        const double s = std::cos(th) * data.inputs(i, 0) + std::sin(th) * data.inputs(i, 1) - off;
        ok += ((s > 0) == (data.labels[i] > 0.5));
      }
      separable = (ok == n);
    }
  }
  REQUIRE(separable);

  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.02;
  cfg.optimizer = OptimizerKind::adam;
  cfg.seed = 3;
  const auto res = train_supervised(Mlp::random(std::vector<Eigen::Index>{2, 2, 1}, Activation::sigmoid, 1, 0.5),
                                    data, cfg);
  CHECK(res.loss_history.size() == 100);
  CHECK(accuracy(res.net, data) >= 0.99);
}

TEST_CASE("train_supervised: deterministic for a fixed seed") {
  Rng rng(2);
  LabeledDataset data{Eigen::MatrixXd(64, 2), Eigen::VectorXd(64)};
  for (int i = 0; i < 64; ++i) {
    data.inputs.row(i) << uniform(rng, -1, 1), uniform(rng, -1, 1);
    data.labels[i] = data.inputs(i, 0) > 0;
  }
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 8;
  cfg.seed = 17;
  const auto init = random_net({2, 3, 1}, Activation::sigmoid, 4);
  const auto a = train_supervised(init, data, cfg);
  const auto b = train_supervised(init, data, cfg);
  CHECK(a.net == b.net);
  CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("train_supervised: divergence aborts with diagnostic") {
  LabeledDataset data{Eigen::MatrixXd::Constant(4, 1, 1e3), Eigen::VectorXd::Constant(4, 1e6)};
  TrainConfig cfg;
  cfg.loss = Loss::mean_squared_error;
  cfg.learning_rate = 1e3;
  cfg.batch_size = 4;
  cfg.epochs = 50;
  Mlp net({make_layer(Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(2), Activation::relu),
           make_layer(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1), Activation::linear)});
  CHECK_THROWS_AS(train_supervised(net, data, cfg), DivergenceError);
}

TEST_CASE("train_supervised: invalid config rejected") {
  LabeledDataset data{Eigen::MatrixXd::Zero(4, 2), Eigen::VectorXd::Zero(4)};
  TrainConfig cfg;
  cfg.batch_size = 5;
  CHECK_THROWS_AS(train_supervised(random_net({2, 2, 1}, Activation::sigmoid, 1), data, cfg), ConfigError);
}

TEST_CASE("model file round trip is bit-exact") {
  const auto net = random_net({4, 7, 5}, Activation::linear, 99, 3.0);
  const auto path = std::filesystem::temp_directory_path() / "ikf_model_roundtrip.json";
  save_model(net, path);
  const auto loaded = load_model(path);
  CHECK(loaded == net);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(4);
    for (int k = 0; k < 4; ++k) x[k] = uniform(rng, -5, 5);
    CHECK(loaded.forward(x) == net.forward(x));
  }
  std::filesystem::remove(path);
}

TEST_CASE("model file with mismatched layer dims names the layer") {
  auto j = model_to_json(random_net({2, 3, 1}, Activation::sigmoid, 1));
  j["layers"][1]["cols"] = 4;
  j["layers"][1]["weights"] = std::vector<double>(4, 0.0);
  try {
    (void)model_from_json(j);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.field() == "layers[1].cols");
  }
  auto k = model_to_json(random_net({2, 3, 1}, Activation::sigmoid, 1));
  k["layers"][0]["bias"] = std::vector<double>{1.0};
  CHECK_THROWS_WITH_AS((void)model_from_json(k), doctest::Contains("layers[0].bias"), ParseError);
}

TEST_CASE("glorot init: bounded weights, zero biases, seeded") {
  const std::vector<Eigen::Index> widths{4, 10, 5};
  const auto a = Mlp::glorot(widths, Activation::linear, 3);
  const auto b = Mlp::glorot(widths, Activation::linear, 4);
  CHECK_FALSE(a == b);
  CHECK(a == Mlp::glorot(widths, Activation::linear, 3));
  CHECK(a.layer(0).weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 14));
  CHECK(a.layer(1).weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 15));
  CHECK(a.layer(0).bias.isZero());
  CHECK(a.layer(1).bias.isZero());
}
