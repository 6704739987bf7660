#include "ikf/rl/replay.hpp"

#include <cmath>
#include <limits>

#include "ikf/common/error.hpp"

namespace ikf::rl {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
  if (capacity == 0) throw ConfigError("sum tree capacity must be positive");
  while (base_ < capacity) base_ *= 2;
  sum_.assign(2 * base_, 0.0);
  min_.assign(2 * base_, std::numeric_limits<double>::infinity());
}

void SumTree::set(std::size_t i, double value) {
  if (i >= capacity_) throw Error("sum tree index out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw Error("sum tree values must be finite and non-negative");
  std::size_t k = base_ + i;
  sum_[k] = value;
  min_[k] = value;
  for (k /= 2; k >= 1; k /= 2) {
    sum_[k] = sum_[2 * k] + sum_[2 * k + 1];
    min_[k] = std::min(min_[2 * k], min_[2 * k + 1]);
  }
}

std::size_t SumTree::find(double prefix) const {
  std::size_t k = 1;
  while (k < base_) {
    const std::size_t left = 2 * k;
    if (prefix < sum_[left] || sum_[left + 1] <= 0.0) {
      k = left;
    } else {
      prefix -= sum_[left];
      k = left + 1;
    }
  }
  return std::min(k - base_, capacity_ - 1);
}

PrioritizedReplay::PrioritizedReplay(ReplayConfig cfg) : cfg_(cfg), tree_(cfg.capacity) {
  if (cfg_.alpha < 0.0) throw ConfigError("replay alpha must be non-negative");
  if (!(cfg_.priority_floor > 0.0)) throw ConfigError("priority floor must be positive");
  data_.resize(cfg_.capacity);
  multiplier_.assign(cfg_.capacity, 1.0);
}

void PrioritizedReplay::add(Transition t, double rho, double multiplier) {
  if (!(rho > 0.0) || !(multiplier > 0.0) || multiplier > 1.0)
    throw Error("replay priority must be positive and multiplier in (0, 1]");
  data_[next_] = std::move(t);
  multiplier_[next_] = multiplier;
  tree_.set(next_, std::pow(rho * multiplier, cfg_.alpha));
  next_ = (next_ + 1) % cfg_.capacity;
  size_ = std::min(size_ + 1, cfg_.capacity);
}

void PrioritizedReplay::update(std::size_t index, double rho) {
  if (index >= size_) throw Error("replay index out of range");
  if (!(rho > 0.0)) throw Error("replay priority must be positive");
  tree_.set(index, std::pow(rho * multiplier_[index], cfg_.alpha));
}

PrioritizedReplay::Batch PrioritizedReplay::sample(std::size_t n, double beta, Rng& rng) const {
  if (size_ == 0) throw Error("cannot sample from an empty replay buffer");
  Batch b;
  b.indices.resize(n);
  b.weights.resize(static_cast<Eigen::Index>(n));
  const double total = tree_.total();
  const double segment = total / static_cast<double>(n);
  const double n_items = static_cast<double>(size_);
  const double max_w = std::pow(n_items * tree_.min() / total, -beta);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + uniform01(rng)) * segment;
    std::size_t idx = tree_.find(std::min(u, std::nextafter(total, 0.0)));
    if (idx >= size_) idx = size_ - 1;
    b.indices[i] = idx;
    const double p = tree_.get(idx) / total;
    b.weights[static_cast<Eigen::Index>(i)] = std::pow(n_items * p, -beta) / max_w;
  }
  return b;
}

}  // namespace ikf::rl
