#pragma once

#include "ikf/geom/polytope.hpp"
#include "ikf/rl/environment.hpp"
#include "ikf/shepherd/env.hpp"

namespace ikf::shepherd {

// Shepherding as an rl::Environment over normalized observation features.
class ShepherdTask final : public rl::Environment {
 public:
  explicit ShepherdTask(EnvConfig cfg) : env_(std::move(cfg)) {}

  Eigen::Index state_dim() const override { return 4; }
  int num_actions() const override { return kNumActions; }
  Eigen::VectorXd reset(std::uint64_t episode_seed) override {
    return env_.reset(episode_seed).features(env_.config().field_size);
  }
  rl::EnvStep step(int action) override;
  int steps() const override { return env_.steps(); }
  std::unique_ptr<rl::Environment> clone() const override { return std::make_unique<ShepherdTask>(env_.config()); }

  ShepherdEnv& env() { return env_; }
  const ShepherdEnv& env() const { return env_; }

 private:
  ShepherdEnv env_;
};

// Bounds of the observation features: distances over [0, sqrt 2], angles over [-1, 1].
geom::Box feature_box();

}  // namespace ikf::shepherd
