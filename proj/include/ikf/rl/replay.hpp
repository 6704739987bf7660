#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ikf/common/random.hpp"

namespace ikf::rl {

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;  // absorbing: no bootstrap from next_state
};

// Binary sum tree with a parallel min tree over leaf values.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  void set(std::size_t i, double value);
  double get(std::size_t i) const { return sum_[base_ + i]; }
  double total() const { return sum_[1]; }
  // Minimum over leaves that were set at least once.
  double min() const { return min_[1]; }
  // Leaf whose cumulative range contains `prefix` in [0, total()).
  std::size_t find(double prefix) const;

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> sum_;
  std::vector<double> min_;
};

struct ReplayConfig {
  std::size_t capacity = 50000;
  double alpha = 0.6;
  double beta_start = 0.4;
  double beta_end = 1.0;
  // Added to |TD error| so no transition starves.
  double priority_floor = 1e-3;
};

// Proportional prioritized replay: P(i) proportional to (rho_i * m_i)^alpha
// where m_i is a fixed per-transition multiplier set at insertion.
class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(ReplayConfig cfg);

  const ReplayConfig& config() const { return cfg_; }
  std::size_t size() const { return size_; }
  void add(Transition t, double rho, double multiplier = 1.0);

  struct Batch {
    std::vector<std::size_t> indices;
    Eigen::VectorXd weights;  // importance weights, max-normalized over the buffer
  };
  // Stratified proportional sampling.
  Batch sample(std::size_t n, double beta, Rng& rng) const;
  void update(std::size_t index, double rho);

  const Transition& at(std::size_t i) const { return data_[i]; }
  double priority(std::size_t i) const { return tree_.get(i); }
  double multiplier(std::size_t i) const { return multiplier_[i]; }
  double total_priority() const { return tree_.total(); }

 private:
  ReplayConfig cfg_;
  SumTree tree_;
  std::vector<Transition> data_;
  std::vector<double> multiplier_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
};

}  // namespace ikf::rl
