#include "ikf/app/shepherd_experiment.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>

#include "ikf/app/json_util.hpp"
#include "ikf/app/pipeline.hpp"
#include "ikf/baselines/composite.hpp"
#include "ikf/common/random.hpp"
#include "ikf/nn/model_io.hpp"
#include "ikf/shepherd/task.hpp"

namespace ikf::app {

std::string to_string(Arm a) {
  switch (a) {
    case Arm::scratch: return "scratch";
    case Arm::a2t: return "a2t";
    case Arm::multipolar: return "multipolar";
    case Arm::ikf: return "ikf";
    case Arm::ikf_powsa: return "ikf_powsa";
  }
  return "?";
}

Arm arm_from_string(const std::string& s) {
  for (Arm a : kAllArms)
    if (to_string(a) == s) return a;
  throw ConfigError("unknown arm '" + s + "' (expected scratch, a2t, multipolar, ikf, ikf_powsa)");
}

void ShepherdExperimentConfig::validate() const {
  receiver_env.validate();
  sender_env.validate();
  target_env.validate();
  source_training.validate();
  retraining.validate();
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (arms.empty()) throw ConfigError("arms must not be empty");
  if (assess_episodes < 1 || test_episodes < 1) throw ConfigError("episode counts must be positive");
  if (!(d_min_fraction >= 0.0 && d_min_fraction < 1.0)) throw ConfigError("d_min_fraction must be in [0, 1)");
  for (auto h : source_hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
}

nlohmann::json dqn_config_to_json(const rl::DqnConfig& c) {
  return {{"episodes", c.episodes},
          {"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"target_sync_interval", c.target_sync_interval},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"epsilon_decay", c.epsilon_decay},
          {"warmup_steps", c.warmup_steps},
          {"train_every", c.train_every},
          {"huber_delta", c.huber_delta},
          {"max_grad_norm", c.max_grad_norm},
          {"replay",
           {{"capacity", c.replay.capacity},
            {"alpha", c.replay.alpha},
            {"beta_start", c.replay.beta_start},
            {"beta_end", c.replay.beta_end},
            {"priority_floor", c.replay.priority_floor}}},
          {"seed", c.seed}};
}

rl::DqnConfig dqn_config_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  rl::DqnConfig c;
  read_opt(j, "episodes", c.episodes, path);
  read_opt(j, "gamma", c.gamma, path);
  read_opt(j, "learning_rate", c.learning_rate, path);
  read_opt(j, "batch_size", c.batch_size, path);
  read_opt(j, "target_sync_interval", c.target_sync_interval, path);
  read_opt(j, "epsilon_start", c.epsilon_start, path);
  read_opt(j, "epsilon_end", c.epsilon_end, path);
  read_opt(j, "epsilon_decay", c.epsilon_decay, path);
  read_opt(j, "warmup_steps", c.warmup_steps, path);
  read_opt(j, "train_every", c.train_every, path);
  read_opt(j, "huber_delta", c.huber_delta, path);
  read_opt(j, "max_grad_norm", c.max_grad_norm, path);
  read_opt(j, "seed", c.seed, path);
  if (j.contains("replay")) {
    const auto& r = j.at("replay");
    read_opt(r, "capacity", c.replay.capacity, path + ".replay");
    read_opt(r, "alpha", c.replay.alpha, path + ".replay");
    read_opt(r, "beta_start", c.replay.beta_start, path + ".replay");
    read_opt(r, "beta_end", c.replay.beta_end, path + ".replay");
    read_opt(r, "priority_floor", c.replay.priority_floor, path + ".replay");
  }
  c.validate();
  return c;
}

nlohmann::json shepherd_config_to_json(const ShepherdExperimentConfig& cfg) {
  nlohmann::json arms = nlohmann::json::array();
  for (Arm a : cfg.arms) arms.push_back(to_string(a));
  return {{"experiment", "shepherd"},
          {"receiver_env", shepherd::env_config_to_json(cfg.receiver_env)},
          {"sender_env", shepherd::env_config_to_json(cfg.sender_env)},
          {"target_env", shepherd::env_config_to_json(cfg.target_env)},
          {"source_hidden", cfg.source_hidden},
          {"source_training", dqn_config_to_json(cfg.source_training)},
          {"retraining", dqn_config_to_json(cfg.retraining)},
          {"source_seed", cfg.source_seed},
          {"seeds", cfg.seeds},
          {"assess_episodes", cfg.assess_episodes},
          {"assess",
           {{"min_samples", cfg.assess.min_samples},
            {"weak_threshold", cfg.assess.weak_threshold},
            {"failure_window", cfg.assess.failure_window}}},
          {"integrate_min_samples", cfg.integrate.min_samples},
          {"extract", {{"max_hidden_units", cfg.extract.max_hidden_units}, {"minimize_regions", cfg.extract.minimize_regions}}},
          {"d_min_fraction", cfg.d_min_fraction},
          {"test_episodes", cfg.test_episodes},
          {"test_seed", cfg.test_seed},
          {"arms", arms},
          {"budget_seconds", cfg.budget_seconds}};
}

ShepherdExperimentConfig shepherd_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("config", "expected an object");
  ShepherdExperimentConfig cfg;
  auto env = [&](const char* key, shepherd::EnvConfig& out) {
    if (!j.contains(key)) throw ParseError(std::string("config.") + key, "missing");
    const auto& v = j.at(key);
    if (v.is_string()) {
      const auto p = base_dir / v.get<std::string>();
      if (!std::filesystem::exists(p)) throw ConfigError(std::string("config.") + key + ": preset not found: " + p.string());
      out = shepherd::load_env_config(p);
    } else {
      out = shepherd::env_config_from_json(v);
    }
  };
  env("receiver_env", cfg.receiver_env);
  env("sender_env", cfg.sender_env);
  env("target_env", cfg.target_env);
  // Overrides applied to all three environments.
  if (j.contains("env_overrides")) {
    for (auto* e : {&cfg.receiver_env, &cfg.sender_env, &cfg.target_env}) {
      auto merged = shepherd::env_config_to_json(*e);
      merged.merge_patch(j.at("env_overrides"));
      *e = shepherd::env_config_from_json(merged);
    }
  }
  read_opt(j, "source_hidden", cfg.source_hidden, "config");
  if (j.contains("source_training")) cfg.source_training = dqn_config_from_json(j.at("source_training"), "config.source_training");
  if (j.contains("retraining")) cfg.retraining = dqn_config_from_json(j.at("retraining"), "config.retraining");
  read_opt(j, "source_seed", cfg.source_seed, "config");
  read_opt(j, "seeds", cfg.seeds, "config");
  read_opt(j, "assess_episodes", cfg.assess_episodes, "config");
  if (j.contains("assess")) {
    const auto& a = j.at("assess");
    read_opt(a, "min_samples", cfg.assess.min_samples, "config.assess");
    read_opt(a, "weak_threshold", cfg.assess.weak_threshold, "config.assess");
    read_opt(a, "failure_window", cfg.assess.failure_window, "config.assess");
  }
  read_opt(j, "integrate_min_samples", cfg.integrate.min_samples, "config");
  if (j.contains("extract")) {
    read_opt(j.at("extract"), "max_hidden_units", cfg.extract.max_hidden_units, "config.extract");
    read_opt(j.at("extract"), "minimize_regions", cfg.extract.minimize_regions, "config.extract");
  }
  read_opt(j, "d_min_fraction", cfg.d_min_fraction, "config");
  read_opt(j, "test_episodes", cfg.test_episodes, "config");
  read_opt(j, "test_seed", cfg.test_seed, "config");
  if (j.contains("arms")) {
    std::vector<std::string> names;
    read_opt(j, "arms", names, "config");
    cfg.arms.clear();
    for (const auto& n : names) cfg.arms.push_back(arm_from_string(n));
  }
  read_opt(j, "budget_seconds", cfg.budget_seconds, "config");
  cfg.validate();
  return cfg;
}

ShepherdExperimentConfig load_shepherd_config(const std::filesystem::path& path) {
  return shepherd_config_from_json(nn::read_json_file(path), path.parent_path());
}

nn::Mlp train_source(const shepherd::EnvConfig& env, const std::vector<Eigen::Index>& hidden, const rl::DqnConfig& cfg,
                     rl::TrainOutput* out) {
  shepherd::ShepherdTask task(env);
  std::vector<Eigen::Index> widths{task.state_dim()};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(task.num_actions());
  auto policy = std::make_unique<rl::MlpQ>(baselines::build_scratch(widths, mix_seed(cfg.seed, 0x5EED)));
  rl::TrainOutput res = rl::train_ddqn(task, std::move(policy), cfg);
  nn::Mlp net = dynamic_cast<const rl::MlpQ&>(*res.policy).net();
  if (out) *out = std::move(res);
  return net;
}

TargetLogs run_target_episodes(const ShepherdExperimentConfig& cfg, SourceArtifacts& art) {
  TargetLogs logs;
  run_stage(Stage::assess, [&] {
    const shepherd::ShepherdTask target(cfg.target_env);
    const rl::MlpQ rq(art.receiver), sq(art.sender);
    const auto seed = mix_seed(cfg.source_seed, 3);
    art.receiver_on_target = rl::evaluate_policy(target, rq, cfg.assess_episodes, seed, &logs.receiver);
    art.sender_on_target = rl::evaluate_policy(target, sq, cfg.assess_episodes, seed, &logs.sender);
  });
  return logs;
}

void assess_sources(const ShepherdExperimentConfig& cfg, SourceArtifacts& art, const TargetLogs& logs) {
  run_stage(Stage::assess, [&] {
    art.report = fusion::assess_episodes(art.sender_rules, logs.sender, art.receiver_rules, logs.receiver, cfg.assess);
    fusion::annotate(art.sender_rules, art.report.sender);
    fusion::annotate(art.receiver_rules, art.report.receiver);
  });
}

void fuse_sources(const ShepherdExperimentConfig& cfg, SourceArtifacts& art, const TargetLogs& logs) {
  run_stage(Stage::fuse, [&] {
    art.integration = fusion::integrate(art.sender_rules, art.receiver_rules, art.report, cfg.integrate);
    std::vector<fusion::EpisodeLog> all = logs.receiver;
    all.insert(all.end(), logs.sender.begin(), logs.sender.end());
    art.fused_records = fusion::attribute_episodes(art.integration.fused, all, fusion::Owner::fused, cfg.assess);
    fusion::annotate(art.integration.fused, art.fused_records);
    art.weak = fusion::weak_polytopes(art.fused_records, cfg.assess.weak_threshold);
  });
  run_stage(Stage::backconvert, [&] {
    art.hyperplanes = fusion::distinct_hyperplanes(art.integration.fused);
    if (art.hyperplanes.empty()) throw Error("fused rule set has no hidden-unit hyperplanes");
  });
}

void extract_sources(const ShepherdExperimentConfig& cfg, SourceArtifacts& art) {
  run_stage(Stage::extract, [&] {
    const geom::Box box = shepherd::feature_box();
    rules::ExtractConfig ec = cfg.extract;
    ec.source = rules::Source::receiver;
    art.receiver_rules = rules::extract_rules(art.receiver, box, ec);
    ec.source = rules::Source::sender;
    art.sender_rules = rules::extract_rules(art.sender, box, ec);
  });
}

void assess_and_fuse(const ShepherdExperimentConfig& cfg, SourceArtifacts& art) {
  const TargetLogs logs = run_target_episodes(cfg, art);
  assess_sources(cfg, art, logs);
  fuse_sources(cfg, art, logs);
}

SourceArtifacts prepare_sources(const ShepherdExperimentConfig& cfg, nn::Mlp receiver, nn::Mlp sender) {
  SourceArtifacts art;
  art.receiver = std::move(receiver);
  art.sender = std::move(sender);
  extract_sources(cfg, art);
  assess_and_fuse(cfg, art);
  return art;
}

SourceArtifacts prepare_sources(const ShepherdExperimentConfig& cfg) {
  cfg.validate();
  rl::TrainOutput rt, st;
  nn::Mlp receiver, sender;
  run_stage(Stage::train, [&] {
    rl::DqnConfig c = cfg.source_training;
    c.seed = mix_seed(cfg.source_seed, 1);
    receiver = train_source(cfg.receiver_env, cfg.source_hidden, c, &rt);
    c.seed = mix_seed(cfg.source_seed, 2);
    sender = train_source(cfg.sender_env, cfg.source_hidden, c, &st);
  });
  SourceArtifacts art = prepare_sources(cfg, std::move(receiver), std::move(sender));
  art.receiver_training = std::move(rt);
  art.sender_training = std::move(st);
  return art;
}

rl::PowsaConfig powsa_config(const ShepherdExperimentConfig& cfg, const SourceArtifacts& art, bool enabled) {
  rl::PowsaConfig p;
  p.enabled = enabled;
  p.field_size = cfg.target_env.field_size;
  p.d_min = cfg.d_min_fraction * std::numbers::sqrt2 * p.field_size;
  for (const auto& w : art.weak) p.weak_centroids.push_back(w.centroid);
  p.validate();
  return p;
}

std::unique_ptr<rl::QFunction> initial_policy(Arm arm, const SourceArtifacts& art, std::uint64_t seed) {
  const auto width = static_cast<Eigen::Index>(art.hyperplanes.size());
  const Eigen::Index in = art.receiver.input_dim(), out = art.receiver.output_dim();
  switch (arm) {
    case Arm::scratch: {
      const std::vector<Eigen::Index> w{in, width, out};
      return std::make_unique<rl::MlpQ>(baselines::build_scratch(w, mix_seed(seed, 21)));
    }
    case Arm::a2t: return baselines::build_a2t(art.sender, art.receiver, mix_seed(seed, 22));
    case Arm::multipolar: return baselines::build_multipolar(art.sender, art.receiver, mix_seed(seed, 23));
    case Arm::ikf:
    case Arm::ikf_powsa: {
      fusion::BackConvertConfig bc;
      bc.head = nn::Activation::linear;
      bc.seed = mix_seed(seed, 20);
      return std::make_unique<rl::MlpQ>(fusion::type1_from_hyperplanes(art.hyperplanes, out, bc));
    }
  }
  throw ConfigError("unknown arm");
}

ArmRun run_arm(const ShepherdExperimentConfig& cfg, const SourceArtifacts& art, Arm arm, std::uint64_t seed) {
  ArmRun run;
  run.arm = arm;
  run.seed = seed;
  shepherd::ShepherdTask target(cfg.target_env);
  run_stage(Stage::retrain, [&] {
    rl::DqnConfig c = cfg.retraining;
    c.seed = mix_seed(seed, 30);
    std::unique_ptr<rl::PowsaShaper> shaper;
    if (arm == Arm::ikf_powsa)
      shaper = std::make_unique<rl::PowsaShaper>(powsa_config(cfg, art, true), art.integration.fused);
    run.training = rl::train_ddqn(target, initial_policy(arm, art, seed), c, shaper.get());
  });
  run_stage(Stage::evaluate,
            [&] { run.test = rl::evaluate_policy_serial(target, [&](const Eigen::VectorXd& s) { return run.training.policy->greedy_action(s); },
                                                        cfg.test_episodes, cfg.test_seed); });
  return run;
}

ShepherdResult run_shepherd_experiment(const ShepherdExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ShepherdResult res;
  res.sources = prepare_sources(cfg);
  const auto n_seeds = cfg.seeds.size();
  const auto n_jobs = static_cast<long>(cfg.arms.size() * n_seeds);
  res.runs.resize(static_cast<std::size_t>(n_jobs));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long job = 0; job < n_jobs; ++job) {
    try {
      const auto k = static_cast<std::size_t>(job);
      res.runs[k] = run_arm(cfg, res.sources, cfg.arms[k / n_seeds], cfg.seeds[k % n_seeds]);
    } catch (...) {
#pragma omp critical(ikf_shepherd_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  res.metrics.experiment = "shepherd";
  for (const auto& r : res.runs) {
    MetricsRow row;
    row.arm = to_string(r.arm);
    row.seed = r.seed;
    row.success_rate = r.test.success_rate;
    row.mean_steps = r.test.mean_steps;
    row.runtime = r.training.seconds;
    res.metrics.rows.push_back(row);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace ikf::app
