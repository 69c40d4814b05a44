#pragma once

#include <span>
#include <vector>

namespace simbridge {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First-order adaptive optimizer with bias correction. Moment vectors are
// sized on the first step and must match the parameter length thereafter.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // One in-place update. Throws PoisonedUpdate if any gradient entry is
  // non-finite; params, moments and step count are untouched in that case.
  void step(std::span<double> params, std::span<const double> grad);

  long step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  long step_count_ = 0;
};

}  // namespace simbridge
