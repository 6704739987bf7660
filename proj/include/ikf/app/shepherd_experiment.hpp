#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ikf/app/metrics.hpp"
#include "ikf/fusion/fusion.hpp"
#include "ikf/rl/dqn.hpp"
#include "ikf/rules/extract.hpp"
#include "ikf/shepherd/env.hpp"

namespace ikf::app {

enum class Arm { scratch, a2t, multipolar, ikf, ikf_powsa };
inline constexpr std::array<Arm, 5> kAllArms{Arm::scratch, Arm::a2t, Arm::multipolar, Arm::ikf, Arm::ikf_powsa};
std::string to_string(Arm a);
Arm arm_from_string(const std::string& s);

struct ShepherdExperimentConfig {
  shepherd::EnvConfig receiver_env;  // receiver's original task
  shepherd::EnvConfig sender_env;
  shepherd::EnvConfig target_env;
  std::vector<Eigen::Index> source_hidden = {10};
  rl::DqnConfig source_training;
  rl::DqnConfig retraining;
  std::uint64_t source_seed = 0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int assess_episodes = 200;
  fusion::AssessConfig assess;
  fusion::IntegrateConfig integrate;
  rules::ExtractConfig extract;
  // d_min as a fraction of sqrt(2) L.
  double d_min_fraction = 0.1;
  int test_episodes = 200;
  std::uint64_t test_seed = 9001;
  std::vector<Arm> arms{kAllArms.begin(), kAllArms.end()};
  // Declared wall-clock budget for the whole run.
  double budget_seconds = 7200.0;

  void validate() const;
};

nlohmann::json shepherd_config_to_json(const ShepherdExperimentConfig& cfg);
// Env entries may be inline objects or preset file names resolved against base_dir.
ShepherdExperimentConfig shepherd_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ShepherdExperimentConfig load_shepherd_config(const std::filesystem::path& path);

nlohmann::json dqn_config_to_json(const rl::DqnConfig& c);
rl::DqnConfig dqn_config_from_json(const nlohmann::json& j, const std::string& path);

// Everything the arms share: trained sources, their rules, the assessment on
// the target task and the fused rule set.
struct SourceArtifacts {
  nn::Mlp receiver;
  nn::Mlp sender;
  rl::TrainOutput receiver_training;
  rl::TrainOutput sender_training;
  rules::RuleSet receiver_rules;
  rules::RuleSet sender_rules;
  fusion::AssessmentReport report;
  rl::EvalResult receiver_on_target;
  rl::EvalResult sender_on_target;
  fusion::IntegrationResult integration;
  // Failure attribution of the fused regions over both agents' target episodes.
  std::vector<fusion::PolytopeRecord> fused_records;
  std::vector<fusion::WeakPolytope> weak;
  std::vector<geom::Halfspace> hyperplanes;  // type-1 hidden units
};

nn::Mlp train_source(const shepherd::EnvConfig& env, const std::vector<Eigen::Index>& hidden, const rl::DqnConfig& cfg,
                     rl::TrainOutput* out = nullptr);

// Greedy episodes of both sources on the target task, same seeds for both.
struct TargetLogs {
  std::vector<fusion::EpisodeLog> receiver;
  std::vector<fusion::EpisodeLog> sender;
};
TargetLogs run_target_episodes(const ShepherdExperimentConfig& cfg, SourceArtifacts& art);

void extract_sources(const ShepherdExperimentConfig& cfg, SourceArtifacts& art);
void assess_sources(const ShepherdExperimentConfig& cfg, SourceArtifacts& art, const TargetLogs& logs);
// Integration, failure attribution over both agents' logs, weak regions and
// the type-1 hyperplanes.
void fuse_sources(const ShepherdExperimentConfig& cfg, SourceArtifacts& art, const TargetLogs& logs);

// Runs the target-task episodes of both sources, scores the polytopes and fuses.
void assess_and_fuse(const ShepherdExperimentConfig& cfg, SourceArtifacts& art);

SourceArtifacts prepare_sources(const ShepherdExperimentConfig& cfg);
// Same as prepare_sources with the networks already trained.
SourceArtifacts prepare_sources(const ShepherdExperimentConfig& cfg, nn::Mlp receiver, nn::Mlp sender);

rl::PowsaConfig powsa_config(const ShepherdExperimentConfig& cfg, const SourceArtifacts& art, bool enabled);

// Initial policy of an arm before retraining on the target task.
std::unique_ptr<rl::QFunction> initial_policy(Arm arm, const SourceArtifacts& art, std::uint64_t seed);

struct ArmRun {
  Arm arm = Arm::scratch;
  std::uint64_t seed = 0;
  rl::TrainOutput training;
  rl::EvalResult test;
};

ArmRun run_arm(const ShepherdExperimentConfig& cfg, const SourceArtifacts& art, Arm arm, std::uint64_t seed);

struct ShepherdResult {
  SourceArtifacts sources;
  std::vector<ArmRun> runs;  // arm-major, seeds in config order
  MetricsRecord metrics;
  double seconds = 0.0;
};

// Arm x seed runs fan out over OpenMP threads.
ShepherdResult run_shepherd_experiment(const ShepherdExperimentConfig& cfg);

}  // namespace ikf::app
