#include "ikf/rl/powsa.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ikf/common/error.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::rl {

void PowsaConfig::validate() const {
  if (!(field_size > 0.0)) throw ConfigError("powsa field_size must be positive");
  if (!(d_min >= 0.0) || !(d_min < std::numbers::sqrt2 * field_size))
    throw ConfigError("powsa d_min must satisfy 0 <= d_min < sqrt(2) L");
  for (const auto& c : weak_centroids)
    if (!weak_centroids.empty() && c.size() != weak_centroids.front().size())
      throw DimensionError("weak centroids differ in dimension");
}

double powsa_priority(double rho, double d, const PowsaConfig& cfg) {
  cfg.validate();
  if (!(rho > 0.0) || !(d >= 0.0)) throw Error("powsa_priority needs rho > 0 and d >= 0");
  if (!cfg.enabled) return rho;
  const double eff = std::max(0.0, d - cfg.d_min);
  return std::exp(-0.25 * eff / (std::numbers::sqrt2 * cfg.field_size - cfg.d_min)) * rho;
}

double powsa_epsilon(double eps, double D, const PowsaConfig& cfg) {
  cfg.validate();
  if (!(eps >= 0.0 && eps <= 1.0) || !(D >= 0.0)) throw Error("powsa_epsilon needs eps in [0,1] and D >= 0");
  if (!cfg.enabled) return eps;
  return std::exp(-0.5 * D / (std::numbers::sqrt2 * cfg.field_size - cfg.d_min)) * eps;
}

double feature_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const PowsaConfig& cfg) {
  if (a.size() != b.size()) throw DimensionError("feature vectors differ in dimension");
  Eigen::VectorXd diff = a - b;
  for (const auto k : cfg.angle_dims)
    if (k < diff.size()) diff[k] = std::remainder(diff[k], 2.0);
  return cfg.field_size * diff.norm();
}

PowsaShaper::PowsaShaper(PowsaConfig cfg, rules::RuleSet regions) : cfg_(std::move(cfg)), regions_(std::move(regions)) {
  cfg_.validate();
  region_D_.reserve(regions_.rules.size());
  for (const auto& r : regions_.rules) {
    auto c = geom::centroid(r.region);
    if (!c) {
      const auto ball = geom::chebyshev_center(r.region);
      if (!ball) throw DegeneratePolytopeError("region without interior in PoWSA regions");
      c = ball->center;
    }
    region_D_.push_back(nearest_weak_distance(*c));
  }
}

double PowsaShaper::nearest_weak_distance(const Eigen::VectorXd& z) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cfg_.weak_centroids) best = std::min(best, feature_distance(z, c, cfg_));
  return best;
}

double PowsaShaper::region_distance(const Eigen::VectorXd& z) const {
  const auto idx = rules::locate_rule(regions_, z);
  return idx ? region_D_[*idx] : nearest_weak_distance(z);
}

double PowsaShaper::priority(double rho, const Eigen::VectorXd& z) const {
  if (!enabled()) return rho;
  return powsa_priority(rho, nearest_weak_distance(z), cfg_);
}

double PowsaShaper::epsilon(double eps, const Eigen::VectorXd& z) const {
  if (!enabled()) return eps;
  return powsa_epsilon(eps, region_distance(z), cfg_);
}

}  // namespace ikf::rl
