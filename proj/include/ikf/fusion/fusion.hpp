#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ikf/nn/mlp.hpp"
#include "ikf/nn/train.hpp"
#include "ikf/rules/rules.hpp"

namespace ikf::fusion {

enum class Owner { sender, receiver, fused };
std::string to_string(Owner o);

struct PolytopeRecord {
  std::size_t id = 0;  // rule index in the owner's rule set
  Owner owner = Owner::receiver;
  std::size_t samples_assigned = 0;
  std::optional<double> score;
  bool weak = false;
  double weakness_degree = 0.0;
  Eigen::VectorXd centroid;
};

struct AssessmentReport {
  std::string metric_name;
  std::vector<PolytopeRecord> sender;
  std::vector<PolytopeRecord> receiver;
};

struct AssessConfig {
  // Scores are compared only when both polytopes hold this many samples.
  std::size_t min_samples = 5;
  double weak_threshold = 0.5;
  // Trailing transitions of a failed episode blamed for the failure.
  std::size_t failure_window = 10;
};

// One visited state of an evaluation episode and the reward it earned.
struct EpisodeStep {
  Eigen::VectorXd state;
  double reward = 0.0;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  bool success = false;
};

// Classification: score = accuracy of the owner's network on the samples
// inside the polytope, weakness = error rate.
AssessmentReport assess_classification(const nn::Mlp& sender_net, const rules::RuleSet& sender_rules,
                                       const nn::Mlp& receiver_net, const rules::RuleSet& receiver_rules,
                                       const nn::LabeledDataset& eval, const AssessConfig& cfg = {});

// Reinforcement learning: each agent's own evaluation episodes on the target
// task. score = mean per-transition reward inside the polytope, weakness =
// fraction of failed episodes whose last `failure_window` states visit it.
AssessmentReport assess_episodes(const rules::RuleSet& sender_rules, std::span<const EpisodeLog> sender_episodes,
                                 const rules::RuleSet& receiver_rules, std::span<const EpisodeLog> receiver_episodes,
                                 const AssessConfig& cfg = {});

// Episode-based scores and failure attribution for any rule set.
std::vector<PolytopeRecord> attribute_episodes(const rules::RuleSet& rs, std::span<const EpisodeLog> episodes,
                                               Owner owner, const AssessConfig& cfg = {});

// Rule index per sample (column), -1 where uncovered.
std::vector<long> assign_samples(const rules::RuleSet& rs, const Eigen::MatrixXd& samples);
std::vector<long> assign_samples_serial(const rules::RuleSet& rs, const Eigen::MatrixXd& samples);

// Copies score / weak / weakness_degree onto the rules.
void annotate(rules::RuleSet& rs, const std::vector<PolytopeRecord>& records);

struct WeakPolytope {
  std::size_t id = 0;
  Eigen::VectorXd centroid;
  double weakness_degree = 0.0;
};

std::vector<WeakPolytope> weak_polytopes(const std::vector<PolytopeRecord>& records, double threshold);

// Display intensity in [0,1]: the polytope's own degree, or the degree of a
// weak polytope decayed by centroid distance when that is larger.
std::vector<double> display_shading(const std::vector<PolytopeRecord>& records, double decay_length);

struct IntegrateConfig {
  std::size_t min_samples = 5;
};

struct IntegrationResult {
  rules::RuleSet fused;
  std::size_t adopted = 0;
  std::vector<std::string> log;
};

// Adopts the overlap of every (receiver k, sender j) pair where the sender
// scores higher, ordered by (k, j) ahead of all receiver rules.
IntegrationResult integrate(const rules::RuleSet& sender_rules, const rules::RuleSet& receiver_rules,
                            const AssessmentReport& report, const IntegrateConfig& cfg = {});

// Distinct hyperplanes (up to non-zero scaling) in order of first appearance,
// with unit normals. Hidden-unit hyperplanes are oriented as the unit's
// inactive side. Decision cuts are skipped unless requested.
std::vector<geom::Halfspace> distinct_hyperplanes(const rules::RuleSet& rs, bool include_decision_cuts = false,
                                                  double tol = 1e-7);

// Hyperplanes of `fused` absent from `receiver`.
std::vector<geom::Halfspace> new_hyperplanes(const rules::RuleSet& fused, const rules::RuleSet& receiver,
                                             bool include_decision_cuts = false, double tol = 1e-7);

struct BackConvertConfig {
  nn::Activation head = nn::Activation::sigmoid;
  double head_init_scale = 0.1;
  std::uint64_t seed = 0;
  bool include_decision_cuts = false;
  // Type-2 only: fall back to the pseudo-inverse when W is not invertible.
  bool allow_pinv = true;
};

// One hidden ReLU unit per hyperplane a.x <= b: weights a, bias -b, so a unit
// is off exactly on the halfspace.
nn::Mlp back_convert_type1(const rules::RuleSet& fused, Eigen::Index head_dim, const BackConvertConfig& cfg = {});
nn::Mlp type1_from_hyperplanes(const std::vector<geom::Halfspace>& hyperplanes, Eigen::Index head_dim,
                               const BackConvertConfig& cfg = {});

struct Type2Result {
  nn::Mlp net;
  bool used_pinv = false;
};

// Keeps the receiver's first layer (W, B) and adds a layer realizing the new
// hyperplanes (W', B') where all first-layer units are on: W'' = W^-1 W',
// B'' = B' - B W'' in row-vector convention.
Type2Result back_convert_type2(const nn::Mlp& receiver_net, const std::vector<geom::Halfspace>& new_planes,
                               const BackConvertConfig& cfg = {});

}  // namespace ikf::fusion
