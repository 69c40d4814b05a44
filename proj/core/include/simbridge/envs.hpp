#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "simbridge/rng.hpp"

namespace simbridge {

enum class Task { standing_still, moving_forward };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct TaskSpec {
  Task task = Task::standing_still;
  double target_velocity = 0.2;  // moving_forward only
  int max_steps = 500;
  double dt = 0.01;

  static TaskSpec standing_still();
  static TaskSpec moving_forward();

  // standing_still observes (theta, theta_dot, x, v); moving_forward drops
  // the displacement and observes (v, theta, theta_dot).
  int obs_dim() const { return task == Task::standing_still ? 4 : 3; }
};

// Multiplicative/additive knobs defining the imperfect simulator. All scales
// at 1 and zero noise reproduce the reference environment exactly.
struct DynamicsPerturbation {
  double gravity_scale = 1.0;
  double friction_scale = 1.0;
  double mass_scale = 1.0;
  double actuation_noise_std = 0.0;

  bool is_reference() const {
    return gravity_scale == 1.0 && friction_scale == 1.0 &&
           mass_scale == 1.0 && actuation_noise_std == 0.0;
  }
};

struct RobotState {
  double theta = 0.0;      // pitch angle, rad
  double theta_dot = 0.0;  // pitch angular velocity, rad/s
  double x = 0.0;          // displacement, m
  double v = 0.0;          // linear velocity, m/s
};

inline constexpr double kMaxTorque = 2.0;
inline constexpr double kFailAngle = 0.7;  // rad; episode fails beyond this

// Reward as a function of the pre-step state and the commanded (clipped)
// torque. Actuation noise never enters the reward.
double task_reward(const TaskSpec& spec, const RobotState& s, double torque);

struct RobotStepResult {
  RobotState next;
  double reward = 0.0;
  bool terminated = false;  // |theta| crossed the failure angle
};

// One semi-implicit Euler step of the wheeled inverted pendulum. The torque
// command is clipped to +/- kMaxTorque; actuation noise, if any, is added to
// the clipped command before integration.
RobotStepResult robot_step(const RobotState& s, double torque,
                           const TaskSpec& spec,
                           const DynamicsPerturbation& pert, Rng& rng);

// Stateful wrapper tracking the step budget. Termination (failure angle) and
// truncation (step limit) are reported separately so bootstrapping can treat
// them differently.
class RobotEnv {
 public:
  RobotEnv(TaskSpec spec, DynamicsPerturbation pert)
      : spec_(spec), pert_(pert) {}

  // theta ~ Uniform(+/-0.05), everything else zero.
  std::vector<double> reset(Rng& rng);

  struct Outcome {
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    bool done() const { return terminated || truncated; }
  };
  Outcome step(double torque, Rng& rng);

  std::vector<double> observe() const;
  const RobotState& state() const { return state_; }
  const TaskSpec& spec() const { return spec_; }
  const DynamicsPerturbation& perturbation() const { return pert_; }
  int steps_taken() const { return steps_; }
  int obs_dim() const { return spec_.obs_dim(); }
  static constexpr int action_dim() { return 1; }

 private:
  TaskSpec spec_;
  DynamicsPerturbation pert_;
  RobotState state_;
  int steps_ = 0;
};

// Two-dimensional Gaussian-chain diagnostic MDP. The transition kernel is
// s' = s + clip(a) + shift + eps with isotropic Gaussian eps, so the
// dynamics ratio between two variants has a closed form.
struct ChainVariant {
  std::array<double, 2> shift{0.0, 0.0};
  double noise_std = 0.1;

  static ChainVariant reference() { return {{0.0, 0.0}, 0.1}; }
  static ChainVariant perturbed() { return {{0.2, 0.0}, 0.2}; }
};

class ChainEnv {
 public:
  static constexpr int kDim = 2;
  static constexpr int kHorizon = 20;

  explicit ChainEnv(ChainVariant variant) : variant_(variant) {}

  std::vector<double> reset(Rng& rng);  // s ~ Normal(0, I)

  struct Outcome {
    double reward = 0.0;
    bool truncated = false;  // the chain never fails, only times out
  };
  // Action is clipped to the unit Euclidean ball before use.
  Outcome step(std::span<const double> action, Rng& rng);

  std::vector<double> observe() const;
  const ChainVariant& variant() const { return variant_; }
  int steps_taken() const { return steps_; }

 private:
  ChainVariant variant_;
  std::array<double, 2> s_{0.0, 0.0};
  int steps_ = 0;
};

// Clips a 2-d action to the unit Euclidean ball.
std::array<double, 2> chain_clip_action(std::span<const double> action);

// Exact transition-density ratio P_ref(s'|s,a) / P_pert(s'|s,a) for the
// chain. `a` is interpreted as the commanded action and clipped exactly as
// the environment does.
double chain_true_ratio(const ChainVariant& ref, const ChainVariant& pert,
                        std::span<const double> s, std::span<const double> a,
                        std::span<const double> s_next);

}  // namespace simbridge
