#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Dense>

namespace ikf::rl {

struct EnvStep {
  Eigen::VectorXd state;
  double reward = 0.0;
  bool done = false;
  // Episode ended in an absorbing state (no bootstrapping). A timeout is done
  // but not terminal.
  bool terminal = false;
  bool success = false;
};

// Episodic task with a fixed-size real state and discrete actions.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Eigen::Index state_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual Eigen::VectorXd reset(std::uint64_t episode_seed) = 0;
  virtual EnvStep step(int action) = 0;
  virtual int steps() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

}  // namespace ikf::rl
