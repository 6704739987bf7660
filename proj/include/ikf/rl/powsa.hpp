#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ikf/rules/rules.hpp"

namespace ikf::rl {

// Features are (distance / L, angle / pi, distance / L, angle / pi).
struct PowsaConfig {
  bool enabled = false;
  double field_size = 150.0;
  // Radius (metres) around a weak centroid where the priority multiplier is 1.
  double d_min = 0.1 * 1.4142135623730951 * 150.0;
  std::vector<Eigen::VectorXd> weak_centroids;
  // Feature indices holding angles, compared modulo a full turn.
  std::vector<Eigen::Index> angle_dims = {1, 3};

  void validate() const;
};

// rho * exp(-0.25 * max(0, d - d_min) / (sqrt(2) L - d_min)).
double powsa_priority(double rho, double d, const PowsaConfig& cfg);
// eps * exp(-0.5 * D / (sqrt(2) L - d_min)).
double powsa_epsilon(double eps, double D, const PowsaConfig& cfg);

// Distance in metres between two feature vectors: L times the Euclidean norm
// of the feature difference, angle differences wrapped to (-1, 1].
double feature_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const PowsaConfig& cfg);

// Per-state multipliers. D is measured from the centroid of the rule region
// containing the state.
class PowsaShaper {
 public:
  PowsaShaper(PowsaConfig cfg, rules::RuleSet regions);

  const PowsaConfig& config() const { return cfg_; }
  bool enabled() const { return cfg_.enabled && !cfg_.weak_centroids.empty(); }
  double nearest_weak_distance(const Eigen::VectorXd& z) const;
  double region_distance(const Eigen::VectorXd& z) const;
  double priority(double rho, const Eigen::VectorXd& z) const;
  double epsilon(double eps, const Eigen::VectorXd& z) const;

 private:
  PowsaConfig cfg_;
  rules::RuleSet regions_;
  std::vector<double> region_D_;
};

}  // namespace ikf::rl
