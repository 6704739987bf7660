#include <benchmark/benchmark.h>

#include "ikf/common/random.hpp"
#include "ikf/fusion/fusion.hpp"
#include "ikf/rl/dqn.hpp"
#include "ikf/rl/qfunction.hpp"
#include "ikf/rules/extract.hpp"
#include "ikf/shepherd/env.hpp"
#include "ikf/shepherd/task.hpp"

using namespace ikf;

namespace {

const nn::Mlp& net() {
  static const nn::Mlp n = nn::Mlp::random(std::vector<Eigen::Index>{4, 10, 5}, nn::Activation::linear, 7, 1.0);
  return n;
}

const rules::RuleSet& ruleset() {
  static const rules::RuleSet rs = rules::extract_rules(net(), shepherd::feature_box());
  return rs;
}

Eigen::MatrixXd samples(Eigen::Index n) {
  Rng rng(3);
  const auto box = shepherd::feature_box();
  Eigen::MatrixXd s(4, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < 4; ++i) s(i, j) = uniform(rng, box.lo[i], box.hi[i]);
  return s;
}

void BM_extract(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(rules::extract_rules(net(), shepherd::feature_box()));
}
void BM_extract_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(rules::extract_rules_serial(net(), shepherd::feature_box()));
}

void BM_fidelity(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(rules::fidelity(net(), ruleset(), 20000, 1));
}
void BM_fidelity_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(rules::fidelity_serial(net(), ruleset(), 20000, 1));
}

void BM_assign(benchmark::State& st) {
  const auto s = samples(20000);
  for (auto _ : st) benchmark::DoNotOptimize(fusion::assign_samples(ruleset(), s));
}
void BM_assign_serial(benchmark::State& st) {
  const auto s = samples(20000);
  for (auto _ : st) benchmark::DoNotOptimize(fusion::assign_samples_serial(ruleset(), s));
}

shepherd::EnvConfig bench_env() {
  shepherd::EnvConfig c;
  c.max_steps = 200;
  c.obstacles = {{shepherd::Vec2(70, 70), 15.0}};
  return c;
}

void BM_evaluate(benchmark::State& st) {
  const shepherd::ShepherdTask task(bench_env());
  const rl::MlpQ q(net());
  for (auto _ : st) benchmark::DoNotOptimize(rl::evaluate_policy(task, q, 32, 5));
}
void BM_evaluate_serial(benchmark::State& st) {
  const shepherd::ShepherdTask task(bench_env());
  const rl::MlpQ q(net());
  for (auto _ : st)
    benchmark::DoNotOptimize(
        rl::evaluate_policy_serial(task, [&](const Eigen::VectorXd& x) { return q.greedy_action(x); }, 32, 5));
}

}  // namespace

BENCHMARK(BM_extract)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fidelity)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fidelity_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assign)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assign_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_evaluate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_evaluate_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
