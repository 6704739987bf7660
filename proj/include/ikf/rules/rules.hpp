#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ikf/geom/polytope.hpp"
#include "ikf/nn/mlp.hpp"

namespace ikf::rules {

enum class Source { sender, receiver, fused };
enum class Provenance { extracted, receiver_original, sender_overlap };

std::string to_string(Source s);
std::string to_string(Provenance p);
Source source_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

// Pre-head output on a region: M x + c.
struct AffineMap {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return M * x + c; }
};

// Origin of a region constraint: the inactive or active side of a hidden
// unit's hyperplane, or a cut on the head output separating decisions inside
// one linear region.
enum class CutKind : std::uint8_t { unit_off, unit_on, decision };

inline bool is_unit(CutKind k) { return k != CutKind::decision; }

struct DecisionRule {
  geom::HPolytope region;
  std::vector<CutKind> kinds;  // parallel to region.halfspaces
  int decision = 0;
  AffineMap affine_out;
  nn::ActivationPattern pattern;  // empty for rules not tied to a single net region
  Provenance provenance = Provenance::extracted;

  // Filled in by assessment.
  std::optional<double> score;
  bool weak = false;
  double weakness_degree = 0.0;
};

struct RuleSet {
  Source source = Source::receiver;
  geom::Box state_box;
  std::vector<DecisionRule> rules;

  std::size_t size() const { return rules.size(); }
};

// Keeps `kinds` aligned after `reduced` dropped halfspaces of `full` (order
// preserved, survivors copied verbatim).
std::vector<CutKind> surviving_kinds(const std::vector<geom::Halfspace>& full, const std::vector<CutKind>& kinds,
                                     const std::vector<geom::Halfspace>& reduced);

// "0110|10" style encoding, one group per hidden layer.
std::string pattern_to_string(const nn::ActivationPattern& p);
nn::ActivationPattern pattern_from_string(const std::string& s);

// Index of the rule that decides x: the lowest-index rule containing x
// exactly, else the lowest-index rule containing x within `tol`.
std::optional<std::size_t> locate_rule(const RuleSet& rs, const Eigen::VectorXd& x, double tol = 1e-7);

// Throws CoverageViolationError when no rule contains x.
int evaluate_ruleset(const RuleSet& rs, const Eigen::VectorXd& x);

// Agreement rate between net decisions and rule decisions on uniform samples
// from the rule set's box. Uncovered samples count as disagreements.
double fidelity(const nn::Mlp& net, const RuleSet& rs, std::size_t n_samples, std::uint64_t seed);
double fidelity_serial(const nn::Mlp& net, const RuleSet& rs, std::size_t n_samples, std::uint64_t seed);

}  // namespace ikf::rules
