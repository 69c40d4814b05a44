#include "simbridge/optim.hpp"

#include <cmath>

#include "simbridge/errors.hpp"

namespace simbridge {

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) {
    throw ContractViolation("Adam::step: length mismatch");
  }
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  } else if (m_.size() != params.size()) {
    throw ContractViolation("Adam::step: parameter length changed");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw PoisonedUpdate("Adam::step: non-finite gradient entry");
    }
  }

  ++step_count_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
  }
}

}  // namespace simbridge
