#include "simbridge/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simbridge/errors.hpp"

namespace simbridge {

namespace {

// Wheeled-inverted-pendulum constants; scales from DynamicsPerturbation
// multiply these.
constexpr double kBodyMass = 1.0;     // kg
constexpr double kWheelRadius = 0.1;  // m
constexpr double kPoleLength = 0.5;   // m
constexpr double kGravity = 9.81;     // m/s^2
constexpr double kFriction = 0.5;     // linear drag on v
constexpr double kPitchDamping = 0.1;

double clip(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

double gaussian_log_density(double sq_dist, double sigma, int dim) {
  return -0.5 * sq_dist / (sigma * sigma) -
         0.5 * dim * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

}  // namespace

std::string to_string(Task t) {
  return t == Task::standing_still ? "standing_still" : "moving_forward";
}

Task task_from_string(const std::string& s) {
  if (s == "standing_still") return Task::standing_still;
  if (s == "moving_forward") return Task::moving_forward;
  throw ContractViolation("unknown task: " + s);
}

TaskSpec TaskSpec::standing_still() {
  TaskSpec spec;
  spec.task = Task::standing_still;
  return spec;
}

TaskSpec TaskSpec::moving_forward() {
  TaskSpec spec;
  spec.task = Task::moving_forward;
  return spec;
}

double task_reward(const TaskSpec& spec, const RobotState& s, double torque) {
  if (spec.task == Task::standing_still) {
    return 30.0 - s.x * s.x - s.v * s.v - s.theta * s.theta -
           s.theta_dot * s.theta_dot - torque * torque;
  }
  const double dv = s.v - spec.target_velocity;
  return 15.0 - dv * dv - torque * torque;
}

RobotStepResult robot_step(const RobotState& s, double torque,
                           const TaskSpec& spec,
                           const DynamicsPerturbation& pert, Rng& rng) {
  const double command = clip(torque, -kMaxTorque, kMaxTorque);
  double applied = command;
  if (pert.actuation_noise_std > 0.0) {
    applied += rng.normal(0.0, pert.actuation_noise_std);
  }

  const double mass = kBodyMass * pert.mass_scale;
  const double gravity = kGravity * pert.gravity_scale;
  const double friction = kFriction * pert.friction_scale;

  // v_dot = tau/(m r_w) - c_f v
  // theta_dd = (g/l) sin(theta) + (v_dot/l) cos(theta) - c_d theta_dot
  // Note the + on the coupling term: with the PD behavior controller's sign
  // convention, driving backward is what catches a forward fall.
  const double v_dot = applied / (mass * kWheelRadius) - friction * s.v;
  const double theta_dd = (gravity / kPoleLength) * std::sin(s.theta) +
                          (v_dot / kPoleLength) * std::cos(s.theta) -
                          kPitchDamping * s.theta_dot;

  // semi-implicit Euler: velocities first, positions use the new velocities
  RobotStepResult out;
  out.next.v = s.v + spec.dt * v_dot;
  out.next.theta_dot = s.theta_dot + spec.dt * theta_dd;
  out.next.x = s.x + spec.dt * out.next.v;
  out.next.theta = s.theta + spec.dt * out.next.theta_dot;
  out.reward = task_reward(spec, s, command);
  out.terminated = std::abs(out.next.theta) > kFailAngle;
  return out;
}

std::vector<double> RobotEnv::reset(Rng& rng) {
  state_ = RobotState{};
  state_.theta = rng.uniform(-0.05, 0.05);
  steps_ = 0;
  return observe();
}

RobotEnv::Outcome RobotEnv::step(double torque, Rng& rng) {
  auto r = robot_step(state_, torque, spec_, pert_, rng);
  state_ = r.next;
  ++steps_;
  Outcome out;
  out.reward = r.reward;
  out.terminated = r.terminated;
  out.truncated = !r.terminated && steps_ >= spec_.max_steps;
  return out;
}

std::vector<double> RobotEnv::observe() const {
  if (spec_.task == Task::standing_still) {
    return {state_.theta, state_.theta_dot, state_.x, state_.v};
  }
  return {state_.v, state_.theta, state_.theta_dot};
}

std::array<double, 2> chain_clip_action(std::span<const double> action) {
  if (action.size() != ChainEnv::kDim) {
    throw ContractViolation("chain action must be 2-dimensional");
  }
  std::array<double, 2> a{action[0], action[1]};
  const double norm = std::sqrt(a[0] * a[0] + a[1] * a[1]);
  if (norm > 1.0) {
    a[0] /= norm;
    a[1] /= norm;
  }
  return a;
}

std::vector<double> ChainEnv::reset(Rng& rng) {
  s_[0] = rng.normal();
  s_[1] = rng.normal();
  steps_ = 0;
  return observe();
}

ChainEnv::Outcome ChainEnv::step(std::span<const double> action, Rng& rng) {
  const auto a = chain_clip_action(action);
  for (int i = 0; i < kDim; ++i) {
    s_[i] += a[i] + variant_.shift[i] + rng.normal(0.0, variant_.noise_std);
  }
  ++steps_;
  Outcome out;
  out.reward = -(s_[0] * s_[0] + s_[1] * s_[1]);
  out.truncated = steps_ >= kHorizon;
  return out;
}

std::vector<double> ChainEnv::observe() const { return {s_[0], s_[1]}; }

double chain_true_ratio(const ChainVariant& ref, const ChainVariant& pert,
                        std::span<const double> s, std::span<const double> a,
                        std::span<const double> s_next) {
  if (s.size() != ChainEnv::kDim || s_next.size() != ChainEnv::kDim) {
    throw ContractViolation("chain_true_ratio: dimension mismatch");
  }
  const auto act = chain_clip_action(a);
  double sq_ref = 0.0, sq_pert = 0.0;
  for (int i = 0; i < ChainEnv::kDim; ++i) {
    const double delta = s_next[i] - s[i] - act[i];
    const double dr = delta - ref.shift[i];
    const double dp = delta - pert.shift[i];
    sq_ref += dr * dr;
    sq_pert += dp * dp;
  }
  const double log_ratio =
      gaussian_log_density(sq_ref, ref.noise_std, ChainEnv::kDim) -
      gaussian_log_density(sq_pert, pert.noise_std, ChainEnv::kDim);
  return std::exp(log_ratio);
}

}  // namespace simbridge
