#include "ikf/rl/dqn.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"

namespace ikf::rl {

void DqnConfig::validate() const {
  if (episodes < 0) throw ConfigError("episodes must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (target_sync_interval < 1) throw ConfigError("target_sync_interval must be positive");
  for (double e : {epsilon_start, epsilon_end})
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must be in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("epsilon_decay must be in (0, 1]");
  if (train_every < 1) throw ConfigError("train_every must be positive");
  if (replay.capacity < static_cast<std::size_t>(batch_size)) throw ConfigError("replay capacity below batch size");
}

double epsilon_schedule(const DqnConfig& cfg, int episode) {
  return std::max(cfg.epsilon_end, cfg.epsilon_start * std::pow(cfg.epsilon_decay, episode));
}

Eigen::VectorXd double_q_targets(const Eigen::MatrixXd& online_next, const Eigen::MatrixXd& target_next,
                                 const Eigen::VectorXd& rewards, const std::vector<bool>& done, double gamma) {
  const Eigen::Index n = rewards.size();
  if (online_next.cols() != n || target_next.cols() != n || static_cast<Eigen::Index>(done.size()) != n ||
      online_next.rows() != target_next.rows())
    throw DimensionError("double_q_targets: inconsistent batch shapes");
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = rewards[i];
    if (!done[static_cast<std::size_t>(i)]) {
      const int a = nn::decision_from_pre_head(online_next.col(i));
      y[i] += gamma * target_next(a, i);
    }
  }
  return y;
}

double huber(double x, double delta) {
  const double a = std::abs(x);
  return a <= delta ? 0.5 * x * x : delta * (a - 0.5 * delta);
}

double huber_grad(double x, double delta) { return std::clamp(x, -delta, delta); }

double transition_priority(double td_error, const Eigen::VectorXd& state, double floor, const PowsaShaper* powsa) {
  const double rho = std::abs(td_error) + floor;
  return powsa ? powsa->priority(rho, state) : rho;
}

namespace {

struct Learner {
  const DqnConfig& cfg;
  QFunction& online;
  std::unique_ptr<QFunction> target;
  nn::Optimizer opt;
  PrioritizedReplay buffer;

  double td_error(const Transition& t) const {
    const Eigen::MatrixXd next = t.next_state;
    const Eigen::VectorXd y = double_q_targets(online.q_values(next), target->q_values(next),
                                               Eigen::VectorXd::Constant(1, t.reward), {t.done}, cfg.gamma);
    return online.q(t.state)[t.action] - y[0];
  }

  double update(double beta, Rng& rng) {
    const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), beta, rng);
    const auto n = static_cast<Eigen::Index>(batch.indices.size());
    const Eigen::Index dim = online.state_dim();
    Eigen::MatrixXd s(dim, n), s2(dim, n);
    Eigen::VectorXd r(n);
    std::vector<bool> done(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& t = buffer.at(batch.indices[static_cast<std::size_t>(i)]);
      s.col(i) = t.state;
      s2.col(i) = t.next_state;
      r[i] = t.reward;
      done[static_cast<std::size_t>(i)] = t.done;
    }
    const Eigen::VectorXd y = double_q_targets(online.q_values(s2), target->q_values(s2), r, done, cfg.gamma);
    const Eigen::MatrixXd q = online.q_values(s);
    Eigen::MatrixXd d_q = Eigen::MatrixXd::Zero(q.rows(), n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& t = buffer.at(batch.indices[static_cast<std::size_t>(i)]);
      const double delta = q(t.action, i) - y[i];
      loss += batch.weights[i] * huber(delta, cfg.huber_delta);
      d_q(t.action, i) = batch.weights[i] * huber_grad(delta, cfg.huber_delta) / static_cast<double>(n);
      buffer.update(batch.indices[static_cast<std::size_t>(i)], std::abs(delta) + cfg.replay.priority_floor);
    }
    loss /= static_cast<double>(n);
    if (!std::isfinite(loss)) return loss;
    QGradients g = online.gradient(s, d_q);
    const double norm = std::sqrt(g.squared_norm());
    if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) g.scale(cfg.max_grad_norm / norm);
    opt.step(online.trainable_parameters(), g.spans());
    return loss;
  }
};

}  // namespace

TrainOutput train_ddqn(Environment& env, std::unique_ptr<QFunction> policy, const DqnConfig& cfg,
                       const PowsaShaper* powsa) {
  cfg.validate();
  if (!policy) throw ConfigError("train_ddqn needs a policy");
  if (policy->num_actions() != env.num_actions() || policy->state_dim() != env.state_dim())
    throw DimensionError("policy does not match the environment's state or action dimension");
  const auto t0 = std::chrono::steady_clock::now();
  if (powsa && !powsa->enabled()) powsa = nullptr;

  Learner learner{cfg, *policy, policy->clone(), nn::Optimizer({nn::OptimizerKind::adam, cfg.learning_rate}),
                  PrioritizedReplay(cfg.replay)};
  Rng rng(mix_seed(cfg.seed, 0xD0));
  TrainOutput out;
  long steps = 0;
  const int n_actions = env.num_actions();

  for (int e = 0; e < cfg.episodes; ++e) {
    const double eps_base = epsilon_schedule(cfg, e);
    const double progress = cfg.episodes > 1 ? static_cast<double>(e) / (cfg.episodes - 1) : 1.0;
    const double beta = cfg.replay.beta_start + (cfg.replay.beta_end - cfg.replay.beta_start) * progress;
    Eigen::VectorXd s = env.reset(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(e)));
    EpisodeStats st;
    st.episode = e;
    double reward = 0.0, eps_sum = 0.0, loss_sum = 0.0;
    int updates = 0;
    for (;;) {
      const double eps = powsa ? powsa->epsilon(eps_base, s) : eps_base;
      eps_sum += eps;
      int a;
      if (uniform01(rng) < eps)
        a = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_actions)));
      else
        a = policy->greedy_action(s);
      EnvStep r = env.step(a);
      reward += r.reward;
      ++st.steps;
      ++steps;
      auto diverged = [&](const std::string& what) {
        std::ostringstream msg;
        msg << what << " at episode " << e << ", step " << st.steps << " (total " << steps << "), epsilon " << eps;
        return DivergenceError(msg.str());
      };
      Transition t{s, a, r.reward, r.state, r.terminal};
      const double td = learner.td_error(t);
      if (!std::isfinite(td)) throw diverged("TD error is non-finite");
      const double rho = std::abs(td) + cfg.replay.priority_floor;
      const double m = powsa ? powsa->priority(rho, s) / rho : 1.0;
      learner.buffer.add(std::move(t), rho, m);

      if (learner.buffer.size() >= static_cast<std::size_t>(std::max(cfg.batch_size, cfg.warmup_steps)) &&
          steps % cfg.train_every == 0) {
        const double loss = learner.update(beta, rng);
        if (!std::isfinite(loss)) throw diverged("TD loss is non-finite");
        loss_sum += loss;
        ++updates;
      }
      if (steps % cfg.target_sync_interval == 0) learner.target = policy->clone();
      s = std::move(r.state);
      if (r.done) {
        st.success = r.success;
        break;
      }
    }
    st.reward_per_step = reward / st.steps;
    st.epsilon = eps_sum / st.steps;
    st.loss = updates ? loss_sum / updates : 0.0;
    out.curve.push_back(st);
  }
  out.total_steps = steps;
  out.policy = std::move(policy);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_curve_csv(const std::vector<EpisodeStats>& curve, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(17);
  f << "episode,reward_per_step,epsilon,loss,steps,success\n";
  for (const auto& s : curve)
    f << s.episode << ',' << s.reward_per_step << ',' << s.epsilon << ',' << s.loss << ',' << s.steps << ','
      << (s.success ? 1 : 0) << '\n';
}

std::vector<EpisodeStats> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(f, line);
  if (line.rfind("episode,reward_per_step,epsilon,loss", 0) != 0) throw ParseError("curve.header", "unexpected header");
  std::vector<EpisodeStats> out;
  int row = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    EpisodeStats s;
    char c1, c2, c3, c4, c5;
    int success = 0;
    if (!(in >> s.episode >> c1 >> s.reward_per_step >> c2 >> s.epsilon >> c3 >> s.loss >> c4 >> s.steps >> c5 >>
          success))
      throw ParseError("curve.rows[" + std::to_string(row) + "]", "malformed row");
    s.success = success != 0;
    out.push_back(s);
    ++row;
  }
  return out;
}

namespace {

struct EpisodeOutcome {
  bool success = false;
  int steps = 0;
};

EpisodeOutcome run_episode(Environment& env, const Policy& policy, std::uint64_t episode_seed,
                           fusion::EpisodeLog* log) {
  Eigen::VectorXd s = env.reset(episode_seed);
  for (;;) {
    const int a = policy(s);
    EnvStep r = env.step(a);
    if (log) log->steps.push_back({s, r.reward});
    s = std::move(r.state);
    if (r.done) {
      if (log) log->success = r.success;
      return {r.success, env.steps()};
    }
  }
}

EvalResult summarize(const std::vector<EpisodeOutcome>& outcomes) {
  EvalResult res;
  res.episodes = static_cast<int>(outcomes.size());
  double steps = 0.0;
  for (const auto& o : outcomes)
    if (o.success) {
      ++res.successes;
      steps += o.steps;
    }
  res.success_rate = res.episodes ? static_cast<double>(res.successes) / res.episodes : 0.0;
  if (res.successes > 0) res.mean_steps = steps / res.successes;
  return res;
}

}  // namespace

EvalResult evaluate_policy_serial(const Environment& env, const Policy& policy, int n_episodes, std::uint64_t seed,
                                  std::vector<fusion::EpisodeLog>* logs) {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  auto local = env.clone();
  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(n_episodes));
  if (logs) logs->assign(static_cast<std::size_t>(n_episodes), {});
  for (int i = 0; i < n_episodes; ++i)
    outcomes[static_cast<std::size_t>(i)] = run_episode(*local, policy, mix_seed(seed, static_cast<std::uint64_t>(i)),
                                                        logs ? &(*logs)[static_cast<std::size_t>(i)] : nullptr);
  return summarize(outcomes);
}

EvalResult evaluate_policy(const Environment& env, const Policy& policy, int n_episodes, std::uint64_t seed,
                           std::vector<fusion::EpisodeLog>* logs) {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(n_episodes));
  if (logs) logs->assign(static_cast<std::size_t>(n_episodes), {});
  std::exception_ptr error;
#pragma omp parallel
  {
    std::unique_ptr<Environment> local;
#pragma omp critical(ikf_eval_clone)
    local = env.clone();
#pragma omp for schedule(dynamic)
    for (int i = 0; i < n_episodes; ++i) {
      try {
        outcomes[static_cast<std::size_t>(i)] =
            run_episode(*local, policy, mix_seed(seed, static_cast<std::uint64_t>(i)),
                        logs ? &(*logs)[static_cast<std::size_t>(i)] : nullptr);
      } catch (...) {
#pragma omp critical(ikf_eval_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(outcomes);
}

EvalResult evaluate_policy(const Environment& env, const QFunction& q, int n_episodes, std::uint64_t seed,
                           std::vector<fusion::EpisodeLog>* logs) {
  return evaluate_policy(env, Policy([&q](const Eigen::VectorXd& s) { return q.greedy_action(s); }), n_episodes,
                         seed, logs);
}

}  // namespace ikf::rl
