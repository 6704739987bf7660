#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ikf/app/metrics.hpp"
#include "ikf/fusion/fusion.hpp"
#include "ikf/nn/train.hpp"
#include "ikf/rules/extract.hpp"

namespace ikf::app {

// Retrained models compared on P3.
enum class SynthArm { type1_fused, type1_scratch, type2_fused, type2_scratch };
inline constexpr std::array<SynthArm, 4> kSynthArms{SynthArm::type1_fused, SynthArm::type1_scratch, SynthArm::type2_fused,
                                                    SynthArm::type2_scratch};
std::string to_string(SynthArm a);

struct SynthExperimentConfig {
  std::size_t n_samples = 5000;  // per training / assessment / test set
  geom::Box box = geom::Box::cube(2, -10, 10);
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Eigen::Index source_hidden = 2;
  nn::TrainConfig source_training;
  nn::TrainConfig retraining;
  fusion::AssessConfig assess;
  fusion::IntegrateConfig integrate;
  rules::ExtractConfig extract;
  double head_init_scale = 0.1;

  void validate() const;
};

nlohmann::json synth_config_to_json(const SynthExperimentConfig& cfg);
SynthExperimentConfig synth_config_from_json(const nlohmann::json& j);
SynthExperimentConfig load_synth_config(const std::filesystem::path& path);

nlohmann::json train_config_to_json(const nn::TrainConfig& c);
nn::TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path);

struct SynthSeedRun {
  std::uint64_t seed = 0;
  double receiver_accuracy = 0.0;  // on P1
  double sender_accuracy = 0.0;    // on P2
  std::size_t adopted = 0;
  Eigen::Index type1_width = 0;
  Eigen::Index type2_width = 0;
  nn::Mlp receiver;
  rules::RuleSet fused;
  std::vector<geom::Halfspace> type2_planes;  // fused hyperplanes new to the receiver
  std::array<double, 4> accuracy{};              // indexed by SynthArm
  std::array<std::vector<double>, 4> loss_curve;  // per epoch
  double seconds = 0.0;
};

// Seeds: mix(seed, 1..5) for P1, P2, P3 train, P3 assessment, P3 test;
// mix(seed, 10..13) for source training and init; mix(seed, 20..22) for
// back-conversion and scratch init; mix(seed, 30) for retraining.
SynthSeedRun run_synth_seed(const SynthExperimentConfig& cfg, std::uint64_t seed);

struct SynthResult {
  std::vector<SynthSeedRun> runs;  // config seed order
  MetricsRecord metrics;
  double seconds = 0.0;
};

// Seeds fan out over OpenMP threads; the serial variant is the reference.
SynthResult run_synth_experiment(const SynthExperimentConfig& cfg);
SynthResult run_synth_experiment_serial(const SynthExperimentConfig& cfg);

// "arm,seed,epoch,loss".
void write_loss_curves(const SynthResult& res, const std::filesystem::path& path);

}  // namespace ikf::app
