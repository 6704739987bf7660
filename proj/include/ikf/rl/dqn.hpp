#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ikf/fusion/fusion.hpp"
#include "ikf/nn/optimizer.hpp"
#include "ikf/rl/environment.hpp"
#include "ikf/rl/powsa.hpp"
#include "ikf/rl/qfunction.hpp"
#include "ikf/rl/replay.hpp"

namespace ikf::rl {

struct DqnConfig {
  int episodes = 1000;
  double gamma = 0.99;
  double learning_rate = 5e-4;
  int batch_size = 32;
  // Hard copy of the online network every this many environment steps.
  int target_sync_interval = 1000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  // Per-episode factor: eps_e = max(end, start * decay^e).
  double epsilon_decay = 0.998;
  int warmup_steps = 500;
  int train_every = 1;
  double huber_delta = 1.0;
  double max_grad_norm = 10.0;
  ReplayConfig replay;
  std::uint64_t seed = 0;

  void validate() const;
};

double epsilon_schedule(const DqnConfig& cfg, int episode);

// y = r + gamma * (1 - done) * Q_target(s', argmax_a Q_online(s', a)).
// Columns of the Q matrices are next states.
Eigen::VectorXd double_q_targets(const Eigen::MatrixXd& online_next, const Eigen::MatrixXd& target_next,
                                 const Eigen::VectorXd& rewards, const std::vector<bool>& done, double gamma);

double huber(double x, double delta);
double huber_grad(double x, double delta);

// Replay priority of a transition: (|td| + floor), rescaled by PoWSA when on.
double transition_priority(double td_error, const Eigen::VectorXd& state, double floor,
                           const PowsaShaper* powsa);

struct EpisodeStats {
  int episode = 0;
  int steps = 0;
  double reward_per_step = 0.0;
  double epsilon = 0.0;  // mean exploration rate used during the episode
  double loss = 0.0;     // mean TD loss of updates in the episode (0 when none)
  bool success = false;
};

struct TrainOutput {
  std::unique_ptr<QFunction> policy;
  std::vector<EpisodeStats> curve;
  long total_steps = 0;
  double seconds = 0.0;
};

// Double DQN with prioritized replay. Deterministic for a fixed seed. Throws
// DivergenceError on a non-finite TD loss.
TrainOutput train_ddqn(Environment& env, std::unique_ptr<QFunction> policy, const DqnConfig& cfg,
                       const PowsaShaper* powsa = nullptr);

void write_curve_csv(const std::vector<EpisodeStats>& curve, const std::filesystem::path& path);
std::vector<EpisodeStats> read_curve_csv(const std::filesystem::path& path);

using Policy = std::function<int(const Eigen::VectorXd&)>;

struct EvalResult {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  // Mean step count over successful episodes only; absent without successes.
  std::optional<double> mean_steps;
};

// Greedy rollouts on episode seeds mix_seed(seed, i). Episodes run in
// parallel on cloned environments; `logs`, when given, receives every
// episode's visited states and rewards in episode order.
EvalResult evaluate_policy(const Environment& env, const Policy& policy, int n_episodes, std::uint64_t seed,
                           std::vector<fusion::EpisodeLog>* logs = nullptr);
EvalResult evaluate_policy_serial(const Environment& env, const Policy& policy, int n_episodes,
                                  std::uint64_t seed, std::vector<fusion::EpisodeLog>* logs = nullptr);
EvalResult evaluate_policy(const Environment& env, const QFunction& q, int n_episodes, std::uint64_t seed,
                           std::vector<fusion::EpisodeLog>* logs = nullptr);

}  // namespace ikf::rl
