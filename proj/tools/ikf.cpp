#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ikf/app/manifest.hpp"
#include "ikf/app/pipeline.hpp"
#include "ikf/app/render.hpp"
#include "ikf/app/shepherd_experiment.hpp"
#include "ikf/app/synth_experiment.hpp"
#include "ikf/baselines/composite.hpp"
#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/fusion/io.hpp"
#include "ikf/nn/model_io.hpp"
#include "ikf/rules/io.hpp"
#include "ikf/shepherd/task.hpp"

namespace fs = std::filesystem;
using namespace ikf;
using app::Stage;

namespace {

struct Options {
  std::string config;
  std::string seeds;
  std::string out = "out";
  std::string arms;
  std::string powsa;
  std::string slice = "20,80";
  std::string model;
  std::string rules;
  bool sources_only = false;
};

using Clock = std::chrono::steady_clock;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& t : split(s, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--seed: '" + t + "' is not a non-negative integer");
    }
  }
  if (out.empty()) throw ConfigError("--seed: empty list");
  return out;
}

std::pair<double, double> parse_slice(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError("--slice expects two distances d1,d2");
  try {
    return {std::stod(parts[0]), std::stod(parts[1])};
  } catch (const std::exception&) {
    throw ConfigError("--slice: distances must be numbers");
  }
}

std::optional<bool> parse_powsa(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "on") return true;
  if (s == "off") return false;
  throw ConfigError("--powsa expects on or off");
}

nlohmann::json read_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  if (!fs::exists(o.config)) throw ConfigError("config file not found: " + o.config);
  return nn::read_json_file(o.config);
}

std::string experiment_kind(const nlohmann::json& j) {
  return j.is_object() && j.contains("experiment") && j.at("experiment").is_string() ? j.at("experiment").get<std::string>()
                                                                                    : "shepherd";
}

app::ShepherdExperimentConfig shepherd_config(const Options& o) {
  return app::run_stage(Stage::config, [&] {
    const auto j = read_config(o);
    auto cfg = app::shepherd_config_from_json(j, fs::path(o.config).parent_path());
    if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
    if (!o.arms.empty()) {
      cfg.arms.clear();
      for (const auto& a : split(o.arms, ',')) cfg.arms.push_back(app::arm_from_string(a));
    }
    if (parse_powsa(o.powsa) == false)
      std::erase(cfg.arms, app::Arm::ikf_powsa);
    cfg.validate();
    return cfg;
  });
}

void write_manifest(const Options& o, const std::string& command, const nlohmann::json& config,
                    const std::vector<std::uint64_t>& seeds, Clock::time_point t0, std::vector<std::string> outputs) {
  app::Manifest m;
  m.command = command;
  m.config = config;
  m.seeds = seeds;
  m.runtime_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  std::sort(outputs.begin(), outputs.end());
  m.outputs = std::move(outputs);
  const std::string name = command == "train-synth" || command == "train-shepherd" ? "manifest.json"
                                                                                    : "manifest_" + command + ".json";
  app::write_manifest(m, fs::path(o.out) / name);
}

// Files of a shepherd artifact directory.
struct Layout {
  fs::path dir;
  fs::path receiver() const { return dir / "receiver.json"; }
  fs::path sender() const { return dir / "sender.json"; }
  fs::path receiver_rules() const { return dir / "receiver_rules.json"; }
  fs::path sender_rules() const { return dir / "sender_rules.json"; }
  fs::path report() const { return dir / "assessment.json"; }
  fs::path fused() const { return dir / "fused_rules.json"; }
  fs::path fused_records() const { return dir / "fused_records.json"; }
  fs::path weak() const { return dir / "weak.json"; }
  fs::path on_target() const { return dir / "sources_on_target.json"; }
  fs::path init(std::uint64_t seed) const { return dir / ("init_ikf_" + std::to_string(seed) + ".json"); }
  fs::path policy(app::Arm a, std::uint64_t s) const { return dir / ("policy_" + tag(a, s) + ".json"); }
  fs::path curve(app::Arm a, std::uint64_t s) const { return dir / ("curve_" + tag(a, s) + ".csv"); }
  fs::path eval(app::Arm a, std::uint64_t s) const { return dir / ("eval_" + tag(a, s) + ".json"); }
  static std::string tag(app::Arm a, std::uint64_t s) { return app::to_string(a) + "_" + std::to_string(s); }
};

void require_file(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) throw Error("missing " + p.string() + " (run `" + producer + "` first)");
}

std::string rel(const Layout& l, const fs::path& p) { return fs::relative(p, l.dir).string(); }

nlohmann::json eval_json(const rl::EvalResult& r) {
  return {{"episodes", r.episodes},
          {"successes", r.successes},
          {"success_rate", r.success_rate},
          {"mean_steps", r.mean_steps ? nlohmann::json(*r.mean_steps) : nlohmann::json(nullptr)}};
}

// Loads what the retraining arms need from an artifact directory.
app::SourceArtifacts load_artifacts(const Layout& l) {
  for (const auto& p : {l.receiver(), l.sender()}) require_file(p, "train-shepherd --sources-only");
  require_file(l.fused(), "fuse");
  require_file(l.weak(), "fuse");
  app::SourceArtifacts art;
  art.receiver = nn::load_model(l.receiver());
  art.sender = nn::load_model(l.sender());
  art.integration.fused = rules::load_ruleset(l.fused());
  art.weak = fusion::weak_from_json(nn::read_json_file(l.weak()));
  art.hyperplanes = fusion::distinct_hyperplanes(art.integration.fused);
  if (art.hyperplanes.empty()) throw Error("fused rule set has no hidden-unit hyperplanes");
  return art;
}

app::TargetLogs source_logs(const app::ShepherdExperimentConfig& cfg, app::SourceArtifacts& art, const Layout& l) {
  require_file(l.receiver_rules(), "extract");
  require_file(l.sender_rules(), "extract");
  art.receiver = nn::load_model(l.receiver());
  art.sender = nn::load_model(l.sender());
  art.receiver_rules = rules::load_ruleset(l.receiver_rules());
  art.sender_rules = rules::load_ruleset(l.sender_rules());
  return app::run_target_episodes(cfg, art);
}

std::vector<std::string> save_sources(const Layout& l, const app::SourceArtifacts& art) {
  nn::save_model(art.receiver, l.receiver());
  nn::save_model(art.sender, l.sender());
  std::vector<std::string> out{rel(l, l.receiver()), rel(l, l.sender())};
  if (!art.receiver_training.curve.empty()) {
    rl::write_curve_csv(art.receiver_training.curve, l.dir / "curve_receiver_source.csv");
    rl::write_curve_csv(art.sender_training.curve, l.dir / "curve_sender_source.csv");
    out.push_back("curve_receiver_source.csv");
    out.push_back("curve_sender_source.csv");
  }
  return out;
}

std::vector<std::string> save_assessment(const Layout& l, const app::SourceArtifacts& art) {
  rules::save_ruleset(art.receiver_rules, l.receiver_rules());
  rules::save_ruleset(art.sender_rules, l.sender_rules());
  fusion::save_report(art.report, l.report());
  nn::write_json_file({{"receiver", eval_json(art.receiver_on_target)}, {"sender", eval_json(art.sender_on_target)}},
                      l.on_target());
  return {rel(l, l.receiver_rules()), rel(l, l.sender_rules()), rel(l, l.report()), rel(l, l.on_target())};
}

std::vector<std::string> save_fusion(const Layout& l, const app::SourceArtifacts& art) {
  rules::save_ruleset(art.integration.fused, l.fused());
  nn::write_json_file(fusion::records_to_json(art.fused_records), l.fused_records());
  nn::write_json_file(fusion::weak_to_json(art.weak), l.weak());
  return {rel(l, l.fused()), rel(l, l.fused_records()), rel(l, l.weak())};
}

std::vector<std::string> save_run(const Layout& l, const app::ArmRun& r) {
  baselines::save_policy(*r.training.policy, l.policy(r.arm, r.seed));
  rl::write_curve_csv(r.training.curve, l.curve(r.arm, r.seed));
  auto j = eval_json(r.test);
  j["arm"] = app::to_string(r.arm);
  j["seed"] = r.seed;
  j["runtime"] = r.training.seconds;
  nn::write_json_file(j, l.eval(r.arm, r.seed));
  return {rel(l, l.policy(r.arm, r.seed)), rel(l, l.curve(r.arm, r.seed)), rel(l, l.eval(r.arm, r.seed))};
}

std::vector<Eigen::Vector2d> action_arrows() {
  std::vector<Eigen::Vector2d> out;
  for (int a = 0; a < shepherd::kNumActions; ++a) out.push_back(shepherd::direction(static_cast<shepherd::Action>(a)));
  return out;
}

std::vector<std::string> render_rules(const fs::path& rules_file, const fs::path& svg, const std::string& slice,
                                      double field_size, const std::string& title) {
  return app::run_stage(Stage::render, [&] {
    const auto rs = rules::load_ruleset(rules_file);
    app::RenderOptions opt;
    opt.title = title;
    app::SliceSpec spec;
    if (rs.state_box.dim() == 4) {
      const auto [d1, d2] = parse_slice(slice);
      spec = app::shepherd_slice(field_size, d1, d2);
      opt.x_label = "sheep bearing / pi";
      opt.y_label = "target bearing / pi";
      opt.decision_arrows = action_arrows();
    } else if (rs.state_box.dim() == 2) {
      spec.x_dim = 0;
      spec.y_dim = 1;
    } else {
      throw ConfigError("can only render 2-D rule sets or the 4-D shepherding features");
    }
    app::write_text_file(app::render_polytopes(rs, spec, opt).svg, svg);
    return std::vector<std::string>{svg.filename().string()};
  });
}

std::vector<app::CurveSeries> smooth(std::vector<app::CurveSeries> series) {
  for (auto& s : series) {
    const std::size_t w = std::max<std::size_t>(1, s.y.size() / 50);
    std::vector<double> y(s.y.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      acc += s.y[i];
      if (i >= w) acc -= s.y[i - w];
      y[i] = acc / static_cast<double>(std::min(i + 1, w));
    }
    s.y = std::move(y);
  }
  return series;
}

// Mean training curve per arm over every curve_<arm>_<seed>.csv in dir.
std::vector<std::string> plot_training_curves(const Layout& l, const std::vector<app::Arm>& arms) {
  std::vector<app::CurveSeries> series;
  for (app::Arm a : arms) {
    std::map<double, std::pair<double, int>> acc;
    for (const auto& entry : fs::directory_iterator(l.dir)) {
      const auto name = entry.path().filename().string();
      const auto prefix = "curve_" + app::to_string(a) + "_";
      if (name.rfind(prefix, 0) != 0 || entry.path().extension() != ".csv") continue;
      const auto rest = name.substr(prefix.size(), name.size() - prefix.size() - 4);
      if (rest.empty() || !std::all_of(rest.begin(), rest.end(), ::isdigit)) continue;
      for (const auto& s : app::curves_from_csv(entry.path(), "episode", "reward_per_step"))
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          acc[s.x[i]].first += s.y[i];
          ++acc[s.x[i]].second;
        }
    }
    if (acc.empty()) continue;
    app::CurveSeries s;
    s.name = app::to_string(a);
    for (const auto& [x, v] : acc) {
      s.x.push_back(x);
      s.y.push_back(v.first / v.second);
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) return {};
  app::PlotOptions opt;
  opt.title = "Retraining on the target task";
  opt.x_label = "episode";
  opt.y_label = "reward per step (moving average)";
  app::write_text_file(app::plot_curves(smooth(std::move(series)), opt).svg, l.dir / "curves.svg");
  return {"curves.svg"};
}

void print_aggregates(const app::MetricsRecord& rec, const std::string& metric) {
  for (const auto& a : rec.aggregates())
    if (a.metric == metric)
      std::printf("%-14s %s %.4f +- %.4f (n=%zu)\n", a.arm.c_str(), metric.c_str(), a.mean, a.std, a.n);
}

// ---- commands ----

void cmd_train_synth(const Options& o) {
  const auto t0 = Clock::now();
  auto cfg = app::run_stage(Stage::config, [&] {
    auto c = app::synth_config_from_json(read_config(o));
    if (!o.seeds.empty()) c.seeds = parse_seeds(o.seeds);
    c.validate();
    return c;
  });
  fs::create_directories(o.out);
  const auto res = app::run_synth_experiment(cfg);
  const fs::path dir(o.out);
  std::vector<std::string> outputs;
  app::run_stage(Stage::report, [&] {
    app::write_metrics_csv(res.metrics, dir / "metrics.csv");
    app::write_loss_curves(res, dir / "loss_curves.csv");
    app::PlotOptions opt;
    opt.title = "Retraining loss on P3 (mean over seeds)";
    opt.x_label = "epoch";
    opt.y_label = "binary cross-entropy";
    app::write_text_file(app::plot_curves(app::curves_from_csv(dir / "loss_curves.csv", "epoch", "loss", "arm"), opt).svg,
                         dir / "loss_curves.svg");
    outputs = {"metrics.csv", "loss_curves.csv", "loss_curves.svg"};
  });
  for (const auto& r : res.runs) {
    const auto tag = std::to_string(r.seed);
    app::run_stage(Stage::fuse, [&] { rules::save_ruleset(r.fused, dir / ("fused_rules_" + tag + ".json")); });
    for (auto&& f : render_rules(dir / ("fused_rules_" + tag + ".json"), dir / ("fused_rules_" + tag + ".svg"), o.slice,
                                 0.0, "Fused rules, seed " + tag))
      outputs.push_back(f);
    outputs.push_back("fused_rules_" + tag + ".json");
  }
  print_aggregates(res.metrics, "accuracy");
  write_manifest(o, "train-synth", app::synth_config_to_json(cfg), cfg.seeds, t0, outputs);
}

void cmd_train_shepherd(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = shepherd_config(o);
  const Layout l{o.out};
  fs::create_directories(l.dir);
  std::vector<std::string> outputs;
  if (o.sources_only) {
    auto art = app::prepare_sources(cfg);
    outputs = save_sources(l, art);
  } else {
    const auto res = app::run_shepherd_experiment(cfg);
    outputs = save_sources(l, res.sources);
    for (auto&& f : save_assessment(l, res.sources)) outputs.push_back(f);
    for (auto&& f : save_fusion(l, res.sources)) outputs.push_back(f);
    for (const auto& r : res.runs)
      for (auto&& f : save_run(l, r)) outputs.push_back(f);
    for (auto&& f : render_rules(l.fused(), l.dir / "polytopes.svg", o.slice, cfg.target_env.field_size,
                                 "Fused rules (red: weak)"))
      outputs.push_back(f);
    app::run_stage(Stage::report, [&] {
      app::write_metrics_csv(res.metrics, l.dir / "metrics.csv");
      outputs.push_back("metrics.csv");
      for (auto&& f : plot_training_curves(l, cfg.arms)) outputs.push_back(f);
    });
    print_aggregates(res.metrics, "success_rate");
  }
  write_manifest(o, "train-shepherd", app::shepherd_config_to_json(cfg), cfg.seeds, t0, outputs);
}

void cmd_extract(const Options& o) {
  const auto t0 = Clock::now();
  const auto j = app::run_stage(Stage::config, [&] { return read_config(o); });
  const Layout l{o.out};
  fs::create_directories(l.dir);
  std::vector<std::string> outputs;
  if (!o.model.empty()) {
    const auto net = app::run_stage(Stage::extract, [&] { return nn::load_model(o.model); });
    geom::Box box = shepherd::feature_box();
    if (experiment_kind(j) == "synth") box = app::run_stage(Stage::config, [&] { return app::synth_config_from_json(j).box; });
    const auto rs = app::run_stage(Stage::extract, [&] { return rules::extract_rules(net, box); });
    rules::save_ruleset(rs, l.dir / "rules.json");
    outputs.push_back("rules.json");
    std::printf("%zu rules\n", rs.size());
  } else {
    const auto cfg = shepherd_config(o);
    require_file(l.receiver(), "train-shepherd --sources-only");
    require_file(l.sender(), "train-shepherd --sources-only");
    app::SourceArtifacts art;
    art.receiver = nn::load_model(l.receiver());
    art.sender = nn::load_model(l.sender());
    app::extract_sources(cfg, art);
    rules::save_ruleset(art.receiver_rules, l.receiver_rules());
    rules::save_ruleset(art.sender_rules, l.sender_rules());
    outputs = {rel(l, l.receiver_rules()), rel(l, l.sender_rules())};
    std::printf("receiver %zu rules, sender %zu rules\n", art.receiver_rules.size(), art.sender_rules.size());
  }
  write_manifest(o, "extract", j, {}, t0, outputs);
}

void cmd_assess(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = shepherd_config(o);
  const Layout l{o.out};
  app::SourceArtifacts art;
  const auto logs = source_logs(cfg, art, l);
  app::assess_sources(cfg, art, logs);
  const auto outputs = save_assessment(l, art);
  std::printf("receiver success %.3f, sender success %.3f on the target task\n", art.receiver_on_target.success_rate,
              art.sender_on_target.success_rate);
  write_manifest(o, "assess", app::shepherd_config_to_json(cfg), {cfg.source_seed}, t0, outputs);
}

void cmd_fuse(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = shepherd_config(o);
  const Layout l{o.out};
  require_file(l.report(), "assess");
  app::SourceArtifacts art;
  const auto logs = source_logs(cfg, art, l);
  art.report = fusion::load_report(l.report());
  app::fuse_sources(cfg, art, logs);
  const auto outputs = save_fusion(l, art);
  std::printf("fused %zu rules (%zu adopted), %zu weak, %zu hyperplanes\n", art.integration.fused.size(),
              art.integration.adopted, art.weak.size(), art.hyperplanes.size());
  write_manifest(o, "fuse", app::shepherd_config_to_json(cfg), {cfg.source_seed}, t0, outputs);
}

void cmd_backconvert(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = shepherd_config(o);
  const Layout l{o.out};
  const auto art = load_artifacts(l);
  std::vector<std::string> outputs;
  app::run_stage(Stage::backconvert, [&] {
    for (auto s : cfg.seeds) {
      baselines::save_policy(*app::initial_policy(app::Arm::ikf, art, s), l.init(s));
      outputs.push_back(rel(l, l.init(s)));
    }
  });
  write_manifest(o, "backconvert", app::shepherd_config_to_json(cfg), cfg.seeds, t0, outputs);
}

std::vector<app::Arm> stage_arms(const Options& o, const app::ShepherdExperimentConfig& cfg) {
  std::vector<app::Arm> arms = cfg.arms;
  // --arm ikf --powsa on selects the PoWSA variant.
  if (parse_powsa(o.powsa) == true)
    for (auto& a : arms)
      if (a == app::Arm::ikf) a = app::Arm::ikf_powsa;
  std::sort(arms.begin(), arms.end());
  arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
  return arms;
}

void cmd_retrain(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = shepherd_config(o);
  const Layout l{o.out};
  const auto art = load_artifacts(l);
  const auto arms = stage_arms(o, cfg);
  std::vector<std::string> outputs;
  for (app::Arm a : arms)
    for (auto s : cfg.seeds) {
      const auto run = app::run_arm(cfg, art, a, s);
      for (auto&& f : save_run(l, run)) outputs.push_back(f);
      std::printf("%-10s seed %llu: success %.3f\n", app::to_string(a).c_str(), static_cast<unsigned long long>(s),
                  run.test.success_rate);
    }
  write_manifest(o, "retrain", app::shepherd_config_to_json(cfg), cfg.seeds, t0, outputs);
}

void cmd_evaluate(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = shepherd_config(o);
  const Layout l{o.out};
  const auto arms = stage_arms(o, cfg);
  std::vector<std::string> outputs;
  app::run_stage(Stage::evaluate, [&] {
    const shepherd::ShepherdTask target(cfg.target_env);
    for (app::Arm a : arms)
      for (auto s : cfg.seeds) {
        require_file(l.policy(a, s), "retrain");
        const auto q = baselines::load_policy(l.policy(a, s));
        const auto res = rl::evaluate_policy_serial(
            target, [&](const Eigen::VectorXd& x) { return q->greedy_action(x); }, cfg.test_episodes, cfg.test_seed);
        auto j = eval_json(res);
        j["arm"] = app::to_string(a);
        j["seed"] = s;
        // keep the training runtime recorded by retrain
        if (fs::exists(l.eval(a, s))) {
          const auto old = nn::read_json_file(l.eval(a, s));
          if (old.contains("runtime")) j["runtime"] = old.at("runtime");
        }
        nn::write_json_file(j, l.eval(a, s));
        outputs.push_back(rel(l, l.eval(a, s)));
        std::printf("%-10s seed %llu: success %.3f\n", app::to_string(a).c_str(), static_cast<unsigned long long>(s),
                    res.success_rate);
      }
  });
  write_manifest(o, "evaluate", app::shepherd_config_to_json(cfg), cfg.seeds, t0, outputs);
}

void cmd_render(const Options& o) {
  const auto t0 = Clock::now();
  const Layout l{o.out};
  double field = 150.0;
  nlohmann::json cfg_json = nullptr;
  if (!o.config.empty()) {
    const auto cfg = shepherd_config(o);
    field = cfg.target_env.field_size;
    cfg_json = app::shepherd_config_to_json(cfg);
  }
  std::vector<std::string> outputs;
  if (!o.rules.empty()) {
    fs::create_directories(l.dir);
    outputs = render_rules(o.rules, l.dir / (fs::path(o.rules).stem().string() + ".svg"), o.slice, field,
                           fs::path(o.rules).stem().string());
  } else {
    require_file(l.fused(), "fuse");
    outputs = render_rules(l.fused(), l.dir / "polytopes.svg", o.slice, field, "Fused rules (red: weak)");
    for (const auto& [file, title] : {std::pair{l.receiver_rules(), "Receiver rules"}, std::pair{l.sender_rules(), "Sender rules"}})
      if (fs::exists(file))
        for (auto&& f : render_rules(file, l.dir / (file.stem().string() + ".svg"), o.slice, field, title))
          outputs.push_back(f);
  }
  write_manifest(o, "render", cfg_json, {}, t0, outputs);
}

void cmd_report(const Options& o) {
  const auto t0 = Clock::now();
  const Layout l{o.out};
  if (!fs::is_directory(l.dir)) throw StageError("report", static_cast<int>(Stage::report), "no directory " + o.out);
  app::MetricsRecord rec;
  std::vector<std::string> outputs;
  app::run_stage(Stage::report, [&] {
    rec.experiment = "shepherd";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(l.dir)) {
      const auto n = e.path().filename().string();
      if (n.rfind("eval_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<app::MetricsRow> rows;
    for (const auto& f : files) {
      const auto j = nn::read_json_file(f);
      app::MetricsRow r;
      r.arm = j.at("arm").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.success_rate = j.at("success_rate").get<double>();
      if (!j.at("mean_steps").is_null()) r.mean_steps = j.at("mean_steps").get<double>();
      if (j.contains("runtime")) r.runtime = j.at("runtime").get<double>();
      rows.push_back(r);
    }
    if (rows.empty()) throw Error("no eval_*.json files in " + o.out);
    // arm order of the experiment, then seed
    auto rank = [](const std::string& a) {
      for (std::size_t i = 0; i < app::kAllArms.size(); ++i)
        if (app::to_string(app::kAllArms[i]) == a) return i;
      return app::kAllArms.size();
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
      return std::pair(rank(a.arm), a.seed) < std::pair(rank(b.arm), b.seed);
    });
    rec.rows = std::move(rows);
    app::write_metrics_csv(rec, l.dir / "metrics.csv");
    outputs.push_back("metrics.csv");
    std::vector<app::Arm> arms(app::kAllArms.begin(), app::kAllArms.end());
    for (auto&& f : plot_training_curves(l, arms)) outputs.push_back(f);
  });
  print_aggregates(rec, "success_rate");
  write_manifest(o, "report", nullptr, {}, t0, outputs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Interpretable knowledge fusion between learning agents"};
  cli.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "experiment config (JSON)");
    c->add_option("--seed", o.seeds, "comma-separated seed list, overrides the config");
    c->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto add_arms = [&](CLI::App* c) {
    c->add_option("--arm", o.arms, "comma-separated arms: scratch,a2t,multipolar,ikf,ikf_powsa");
    c->add_option("--powsa", o.powsa, "on|off")->check(CLI::IsMember({"on", "off"}));
  };
  auto add_slice = [&](CLI::App* c) {
    c->add_option("--slice", o.slice, "sheep and target distances in metres for the polytope slice")->capture_default_str();
  };

  struct Cmd {
    const char* name;
    const char* help;
    void (*run)(const Options&);
    Stage stage;  // exit code for failures not tagged by a stage
  };
  const std::vector<Cmd> cmds{
      {"train-synth", "run the synthetic P1/P2 -> P3 fusion experiment", cmd_train_synth, Stage::train},
      {"train-shepherd", "run the shepherding transfer experiment (or train the sources only)", cmd_train_shepherd, Stage::train},
      {"extract", "extract rules from the trained sources, or from --model", cmd_extract, Stage::extract},
      {"assess", "score the sources' polytopes on the target task", cmd_assess, Stage::assess},
      {"fuse", "integrate sender knowledge and locate weak regions", cmd_fuse, Stage::fuse},
      {"backconvert", "build the fused type-1 initial networks", cmd_backconvert, Stage::backconvert},
      {"retrain", "retrain the arms on the target task", cmd_retrain, Stage::retrain},
      {"evaluate", "test saved policies on the target task", cmd_evaluate, Stage::evaluate},
      {"render", "draw rule polytopes as SVG", cmd_render, Stage::render},
      {"report", "collect evaluations into metrics.csv and curves.svg", cmd_report, Stage::report},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    auto* sub = cli.add_subcommand(c.name, c.help);
    add_common(sub);
    const std::string n = c.name;
    if (n == "train-shepherd" || n == "retrain" || n == "evaluate") add_arms(sub);
    if (n == "train-shepherd" || n == "render") add_slice(sub);
    if (n == "train-shepherd") sub->add_flag("--sources-only", o.sources_only, "train and save the two sources only");
    if (n == "extract") sub->add_option("--model", o.model, "extract a single model file into <out>/rules.json");
    if (n == "render") sub->add_option("--rules", o.rules, "render this rule file instead of the fused rules");
    subs.emplace_back(sub, &c);
  }

  CLI11_PARSE(cli, argc, argv);
  const Cmd* active = nullptr;
  for (const auto& [sub, cmd] : subs)
    if (sub->parsed()) active = cmd;
  try {
    active->run(o);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error [" << app::to_string(active->stage) << "]: " << e.what() << "\n";
    return static_cast<int>(active->stage);
  }
  return 0;
}
