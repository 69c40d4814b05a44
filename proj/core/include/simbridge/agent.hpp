#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simbridge/backbones.hpp"
#include "simbridge/data.hpp"
#include "simbridge/envs.hpp"
#include "simbridge/nets.hpp"
#include "simbridge/optim.hpp"
#include "simbridge/ratio.hpp"

namespace simbridge {

// hybrid is the full learner; sac and iql_offline are the configuration
// extremes shipped as baselines (pure online on the simulator, pure offline
// on the dataset).
enum class AgentMode { hybrid, sac, iql_offline };

std::string to_string(AgentMode m);
AgentMode agent_mode_from_string(const std::string& s);

// Scalars of the mixed bootstrap update. `lambda` weighs the in-sample
// anchor r + gamma*V(s') against the max-entropy branch.
struct MixedTargetConfig {
  static constexpr double kAutoTargetEntropy = -1e300;  // -> -action_dim

  double lambda = 0.1;
  double gamma = 0.99;
  double target_entropy = kAutoTargetEntropy;
  double polyak = 0.005;
  bool use_ratio = true;
  double offline_fraction = 0.5;
  double reward_scale = 0.01;  // applied to rewards inside targets only
  int batch_size = 64;
};

// Tanh-squashed Gaussian policy: net maps s to (mean, log_std), log_std is
// clamped to [-5, 2], samples are squashed by tanh and scaled to the action
// box. Log-densities include the squashing correction.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(Mlp net, double action_scale);

  static GaussianPolicy init(int state_dim, int action_dim,
                             const std::vector<int>& hidden, Rng& rng,
                             double action_scale);

  int state_dim() const { return net_.input_dim(); }
  int action_dim() const { return net_.output_dim() / 2; }
  double action_scale() const { return action_scale_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  struct Sample {
    std::vector<double> action;      // inside the action box
    std::vector<double> pre_squash;  // u with action = scale*tanh(u)
    std::vector<double> noise;       // the standard-normal draw used
    double log_prob = 0.0;
  };

  // Reparameterized draw a = scale*tanh(mean + std*noise).
  Sample act(std::span<const double> s, Rng& rng, MlpScratch& ws) const;
  // Same with caller-supplied noise; the basis of every shared-draw check.
  Sample act_with_noise(std::span<const double> s,
                        std::span<const double> noise, MlpScratch& ws) const;
  // tanh(mean), rng-free.
  Sample act_deterministic(std::span<const double> s, MlpScratch& ws) const;

  // Exact log-density of an arbitrary in-box action (inverts the squashing).
  double log_prob_of(std::span<const double> s, std::span<const double> action,
                     MlpScratch& ws) const;

  struct Head {
    std::vector<double> mean;
    std::vector<double> log_std;  // clamped
    std::vector<double> raw;      // raw net output, pre-clamp
  };
  Head head(std::span<const double> s, MlpScratch& ws) const;

  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

 private:
  Mlp net_;
  double action_scale_ = 1.0;
};

struct CriticSet {
  Mlp q1, q2;
  Mlp q1_target, q2_target;
  Mlp v;
};

// -------- mixed bootstrap target --------

// r + lambda*gamma*v_next + (1-lambda)*gamma*soft_next, or r alone when the
// transition failure-terminated. Affine in lambda by construction.
double mixed_target_value(double lambda, double gamma, double reward,
                          double v_next, double soft_next, bool terminal);

// Soft branch at s': min target critic at (s', a') - beta*log pi(a'|s'),
// with a' formed from the supplied noise.
double soft_state_value(const CriticSet& critics, const GaussianPolicy& policy,
                        double beta, std::span<const double> s_next,
                        std::span<const double> noise, MlpScratch& ws);

double mixed_target_with_noise(const MixedTargetConfig& cfg, double beta,
                               const CriticSet& critics,
                               const GaussianPolicy& policy,
                               const Transition& t,
                               std::span<const double> noise, MlpScratch& ws);

double mixed_target(const MixedTargetConfig& cfg, double beta,
                    const CriticSet& critics, const GaussianPolicy& policy,
                    const Transition& t, Rng& rng, MlpScratch& ws);

// -------- update primitives (exposed for direct testing) --------

// Action-value oracle used by the policy objective. Implementations return
// Q(s,a) and write dQ/da.
class ActionValueFn {
 public:
  virtual ~ActionValueFn() = default;
  virtual double value_and_action_grad(std::span<const double> s,
                                       std::span<const double> a,
                                       std::span<double> dq_da) = 0;
};

// min(q1,q2) with the gradient of the active critic.
class MinCriticValue : public ActionValueFn {
 public:
  MinCriticValue(const Mlp& q1, const Mlp& q2) : q1_(&q1), q2_(&q2) {}
  double value_and_action_grad(std::span<const double> s,
                               std::span<const double> a,
                               std::span<double> dq_da) override;

 private:
  const Mlp* q1_;
  const Mlp* q2_;
  MlpScratch ws_;
  std::vector<double> sa_, in_grad_, pgrad_;
};

// Mean of beta*log pi(a_pi|s) - Q(s, a_pi) over the batch (the negated
// entropy-regularized objective) and its gradient w.r.t. the policy
// parameters, with per-sample noise given by rows of `noise`. Also reports
// the mean log-probability. Accumulates into `grad`.
struct PolicyLoss {
  double loss = 0.0;
  double mean_log_prob = 0.0;
};
PolicyLoss policy_loss_grad(const GaussianPolicy& policy,
                            std::span<const Transition* const> batch,
                            std::span<const double> noise, ActionValueFn& q,
                            double beta, std::span<double> grad,
                            MlpScratch& ws);

// Advantage-weighted log-likelihood loss for the offline baseline:
// -mean( min(exp(temp*(q_min - v)), 100) * log pi(a|s) ).
double awr_policy_loss_grad(const GaussianPolicy& policy,
                            std::span<const Transition* const> batch,
                            std::span<const double> q_min,
                            std::span<const double> v_vals, double temperature,
                            std::span<double> grad, MlpScratch& ws);

// -------- the learner --------

struct AgentOptions {
  AgentMode mode = AgentMode::hybrid;
  MixedTargetConfig mixed;
  BackboneSpec backbone;
  double ratio_clip_low = 0.01;
  double ratio_clip_high = 100.0;
  double ratio_input_noise_std = 0.1;
  double learning_rate = 3e-4;
  long warmup_steps = 1000;  // uniform-random actions before the policy acts
  double awr_temperature = 3.0;
  double init_beta = 0.2;
  std::vector<int> hidden = {64, 64};
};

struct StepMetrics {
  long step = 0;
  double q_loss = 0.0;
  double v_loss = 0.0;
  double pi_loss = 0.0;
  double beta = 0.0;
  double ratio_mean = 1.0;
  double ratio_max = 1.0;
  double ratio_min = 1.0;
};

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;  // population
  int episodes = 0;
};

// Deterministic-mode rollouts of a policy in the reference environment of
// `task`; undiscounted raw returns.
EvalResult evaluate_policy(const GaussianPolicy& policy, const TaskSpec& task,
                           int n_episodes, Rng& rng);

// The full learner: twin critics, in-sample V anchor, squashed Gaussian
// policy, auto-tuned entropy temperature, discriminator pair, simulator
// interaction loop. One instance is one deterministic single-threaded run.
class Agent {
 public:
  // `offline` may be null only in sac mode; the pointer must outlive the
  // agent. Mode-specific configuration forcing (see to_string(AgentMode))
  // happens here.
  Agent(const TaskSpec& task, const DynamicsPerturbation& sim_pert,
        AgentOptions opts, const Dataset* offline, std::uint64_t seed);

  StepMetrics train_step();

  // Deterministic-mode rollouts in the reference environment. Pure: only the
  // supplied rng advances.
  EvalResult evaluate(int n_episodes, Rng& rng) const;

  // Update operations, also callable directly (tests drive them in
  // isolation). Batches are spans of pointers into the dataset/buffer.
  double value_update_op(std::span<const Transition* const> batch);
  struct QUpdateResult {
    double loss = 0.0;
    double ratio_mean = 1.0, ratio_max = 1.0, ratio_min = 1.0;
  };
  QUpdateResult q_update_op(std::span<const Transition* const> offline_batch,
                            std::span<const Transition* const> sim_batch,
                            Rng& rng);
  PolicyLoss policy_update_op(std::span<const Transition* const> batch,
                              Rng& rng);
  double temperature_update_op(double mean_log_prob);
  double temperature_update_batch(std::span<const Transition* const> batch,
                                  Rng& rng);  // samples its own actions
  void polyak_step();

  const GaussianPolicy& policy() const { return policy_; }
  const CriticSet& critics() const { return critics_; }
  CriticSet& critics_mut() { return critics_; }
  const DiscriminatorPair& discriminators() const { return disc_; }
  const AgentOptions& options() const { return opts_; }
  const ReplayBuffer& replay() const { return replay_; }
  double beta() const;
  long steps_done() const { return step_; }
  Rng& rng() { return rng_; }
  std::string rng_state() const { return rng_.state(); }

  void save_checkpoint(const std::string& dir,
                       const std::string& manifest_extra_json) const;

 private:
  void interact();
  void draw_noise(std::size_t rows, Rng& rng, std::vector<double>& out) const;
  void assemble_targets(std::span<const Transition* const> batch, Rng& rng,
                        std::vector<double>& targets);
  void sample_offline(int k, std::vector<const Transition*>& out);

  TaskSpec task_;
  DynamicsPerturbation sim_pert_;
  AgentOptions opts_;
  const Dataset* offline_;
  Rng rng_;

  GaussianPolicy policy_;
  CriticSet critics_;
  DiscriminatorPair disc_;
  double log_beta_ = 0.0;

  Adam opt_q1_, opt_q2_, opt_v_, opt_pi_, opt_beta_, opt_disc_sa_,
      opt_disc_sas_;

  RobotEnv sim_env_;
  ReplayBuffer replay_;
  bool env_needs_reset_ = true;
  std::vector<double> obs_;

  long step_ = 0;

  // reusable workspaces
  MlpScratch ws_;
  ValueUpdateScratch value_ws_;
  DiscScratch disc_ws_;
  std::vector<const Transition*> batch_a_, batch_b_, batch_all_;
  std::vector<double> noise_, targets_, weights_, grad_, sa_, q_min_, v_vals_;
};

}  // namespace simbridge
