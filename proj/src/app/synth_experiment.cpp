#include "ikf/app/synth_experiment.hpp"

#include <chrono>
#include <exception>
#include <fstream>

#include "ikf/app/json_util.hpp"
#include "ikf/app/pipeline.hpp"
#include "ikf/common/random.hpp"
#include "ikf/nn/model_io.hpp"
#include "ikf/synth/tasks.hpp"

namespace ikf::app {

std::string to_string(SynthArm a) {
  switch (a) {
    case SynthArm::type1_fused: return "type1_fused";
    case SynthArm::type1_scratch: return "type1_scratch";
    case SynthArm::type2_fused: return "type2_fused";
    case SynthArm::type2_scratch: return "type2_scratch";
  }
  return "?";
}

void SynthExperimentConfig::validate() const {
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
  if (box.dim() != 2) throw ConfigError("synthetic tasks are two-dimensional");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (source_hidden < 1) throw ConfigError("source_hidden must be positive");
  for (const auto* t : {&source_training, &retraining}) {
    if (t->epochs < 1) throw ConfigError("epochs must be positive");
    if (!(t->learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (t->batch_size < 1) throw ConfigError("batch_size must be positive");
  }
  if (!(head_init_scale >= 0.0)) throw ConfigError("head_init_scale must be non-negative");
}

nlohmann::json train_config_to_json(const nn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"optimizer", c.optimizer == nn::OptimizerKind::adam ? "adam" : "sgd"},
          {"loss", c.loss == nn::Loss::binary_cross_entropy ? "bce" : "mse"}};
}

nn::TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  nn::TrainConfig c;
  read_opt(j, "learning_rate", c.learning_rate, path);
  read_opt(j, "epochs", c.epochs, path);
  read_opt(j, "batch_size", c.batch_size, path);
  std::string opt = "sgd", loss = "bce";
  read_opt(j, "optimizer", opt, path);
  read_opt(j, "loss", loss, path);
  if (opt == "sgd")
    c.optimizer = nn::OptimizerKind::sgd;
  else if (opt == "adam")
    c.optimizer = nn::OptimizerKind::adam;
  else
    throw ParseError(path + ".optimizer", "expected sgd or adam");
  if (loss == "bce")
    c.loss = nn::Loss::binary_cross_entropy;
  else if (loss == "mse")
    c.loss = nn::Loss::mean_squared_error;
  else
    throw ParseError(path + ".loss", "expected bce or mse");
  return c;
}

nlohmann::json synth_config_to_json(const SynthExperimentConfig& cfg) {
  return {{"experiment", "synth"},
          {"n_samples", cfg.n_samples},
          {"box", {{"lower", std::vector<double>(cfg.box.lo.begin(), cfg.box.lo.end())},
                   {"upper", std::vector<double>(cfg.box.hi.begin(), cfg.box.hi.end())}}},
          {"seeds", cfg.seeds},
          {"source_hidden", cfg.source_hidden},
          {"source_training", train_config_to_json(cfg.source_training)},
          {"retraining", train_config_to_json(cfg.retraining)},
          {"assess", {{"min_samples", cfg.assess.min_samples}, {"weak_threshold", cfg.assess.weak_threshold}}},
          {"integrate_min_samples", cfg.integrate.min_samples},
          {"head_init_scale", cfg.head_init_scale}};
}

SynthExperimentConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config", "expected an object");
  SynthExperimentConfig cfg;
  read_opt(j, "n_samples", cfg.n_samples, "config");
  if (j.contains("box")) {
    std::vector<double> lo, hi;
    read_opt(j.at("box"), "lower", lo, "config.box");
    read_opt(j.at("box"), "upper", hi, "config.box");
    if (lo.size() != 2 || hi.size() != 2) throw ParseError("config.box", "expected two-dimensional bounds");
    cfg.box.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), 2);
    cfg.box.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), 2);
  }
  read_opt(j, "seeds", cfg.seeds, "config");
  read_opt(j, "source_hidden", cfg.source_hidden, "config");
  if (j.contains("source_training")) cfg.source_training = train_config_from_json(j.at("source_training"), "config.source_training");
  if (j.contains("retraining")) cfg.retraining = train_config_from_json(j.at("retraining"), "config.retraining");
  if (j.contains("assess")) {
    read_opt(j.at("assess"), "min_samples", cfg.assess.min_samples, "config.assess");
    read_opt(j.at("assess"), "weak_threshold", cfg.assess.weak_threshold, "config.assess");
  }
  read_opt(j, "integrate_min_samples", cfg.integrate.min_samples, "config");
  read_opt(j, "head_init_scale", cfg.head_init_scale, "config");
  cfg.validate();
  return cfg;
}

SynthExperimentConfig load_synth_config(const std::filesystem::path& path) {
  return synth_config_from_json(nn::read_json_file(path));
}

SynthSeedRun run_synth_seed(const SynthExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SynthSeedRun run;
  run.seed = seed;
  auto data = [&](synth::Task t, std::uint64_t k) {
    synth::TaskSpec s;
    s.task = t;
    s.n_samples = cfg.n_samples;
    s.box = cfg.box;
    s.seed = mix_seed(seed, k);
    return synth::generate(s);
  };
  const auto p1 = data(synth::Task::P1, 1), p2 = data(synth::Task::P2, 2), p3 = data(synth::Task::P3, 3);
  const auto p3_eval = data(synth::Task::P3, 4), p3_test = data(synth::Task::P3, 5);
  const auto sig = nn::Activation::sigmoid;

  nn::Mlp receiver, sender;
  run_stage(Stage::train, [&] {
    const std::vector<Eigen::Index> w{2, cfg.source_hidden, 1};
    nn::TrainConfig tc = cfg.source_training;
    tc.seed = mix_seed(seed, 10);
    receiver = nn::train_supervised(nn::Mlp::glorot(w, sig, mix_seed(seed, 11)), p1, tc).net;
    tc.seed = mix_seed(seed, 12);
    sender = nn::train_supervised(nn::Mlp::glorot(w, sig, mix_seed(seed, 13)), p2, tc).net;
  });
  run.receiver_accuracy = nn::accuracy(receiver, p1);
  run.sender_accuracy = nn::accuracy(sender, p2);

  rules::RuleSet rr, sr;
  run_stage(Stage::extract, [&] {
    rules::ExtractConfig ec = cfg.extract;
    ec.source = rules::Source::receiver;
    rr = rules::extract_rules(receiver, cfg.box, ec);
    ec.source = rules::Source::sender;
    sr = rules::extract_rules(sender, cfg.box, ec);
  });
  fusion::AssessmentReport report;
  run_stage(Stage::assess, [&] { report = fusion::assess_classification(sender, sr, receiver, rr, p3_eval, cfg.assess); });
  fusion::IntegrationResult fused;
  run_stage(Stage::fuse, [&] { fused = fusion::integrate(sr, rr, report, cfg.integrate); });
  run.adopted = fused.adopted;
  run.receiver = receiver;
  run.fused = fused.fused;

  std::array<nn::Mlp, 4> nets;
  run_stage(Stage::backconvert, [&] {
    fusion::BackConvertConfig bc;
    bc.head = sig;
    bc.head_init_scale = cfg.head_init_scale;
    bc.seed = mix_seed(seed, 20);
    nets[0] = fusion::back_convert_type1(fused.fused, 1, bc);
    run.type1_width = nets[0].layer(0).out_dim();
    nets[1] = nn::Mlp::glorot(std::vector<Eigen::Index>{2, run.type1_width, 1}, sig, mix_seed(seed, 21));
    run.type2_planes = fusion::new_hyperplanes(fused.fused, rr);
    nets[2] = fusion::back_convert_type2(receiver, run.type2_planes, bc).net;
    run.type2_width = static_cast<Eigen::Index>(run.type2_planes.size());
    nets[3] = nn::Mlp::glorot(std::vector<Eigen::Index>{2, cfg.source_hidden, run.type2_width, 1}, sig, mix_seed(seed, 22));
  });
  run_stage(Stage::retrain, [&] {
    nn::TrainConfig rc = cfg.retraining;
    rc.seed = mix_seed(seed, 30);
    for (std::size_t a = 0; a < nets.size(); ++a) {
      auto res = nn::train_supervised(nets[a], p3, rc);
      run.accuracy[a] = nn::accuracy(res.net, p3_test);
      run.loss_curve[a] = std::move(res.loss_history);
    }
  });
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

namespace {

SynthResult collect(std::vector<SynthSeedRun> runs, std::chrono::steady_clock::time_point t0) {
  SynthResult res;
  res.runs = std::move(runs);
  res.metrics.experiment = "synth";
  for (SynthArm a : kSynthArms)
    for (const auto& r : res.runs) {
      MetricsRow row;
      row.arm = to_string(a);
      row.seed = r.seed;
      row.accuracy = r.accuracy[static_cast<std::size_t>(a)];
      row.runtime = r.seconds;
      res.metrics.rows.push_back(row);
    }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace

SynthResult run_synth_experiment(const SynthExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto n = static_cast<long>(cfg.seeds.size());
  std::vector<SynthSeedRun> runs(cfg.seeds.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      runs[static_cast<std::size_t>(i)] = run_synth_seed(cfg, cfg.seeds[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(ikf_synth_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return collect(std::move(runs), t0);
}

SynthResult run_synth_experiment_serial(const SynthExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SynthSeedRun> runs;
  for (auto s : cfg.seeds) runs.push_back(run_synth_seed(cfg, s));
  return collect(std::move(runs), t0);
}

void write_loss_curves(const SynthResult& res, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "arm,seed,epoch,loss\n";
  for (SynthArm a : kSynthArms)
    for (const auto& r : res.runs) {
      const auto& c = r.loss_curve[static_cast<std::size_t>(a)];
      for (std::size_t e = 0; e < c.size(); ++e) out << to_string(a) << ',' << r.seed << ',' << e + 1 << ',' << c[e] << '\n';
    }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace ikf::app
