#include "simbridge/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "simbridge/errors.hpp"

namespace simbridge {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*ln(2*pi)
constexpr std::size_t kReplayCapacity = 1'000'000;
constexpr double kAwrWeightCap = 100.0;

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

// ln(1 - tanh(u)^2), stable for large |u|
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

void append_sa(std::vector<double>& buf, std::span<const double> s,
               std::span<const double> a) {
  buf.resize(s.size() + a.size());
  std::copy(s.begin(), s.end(), buf.begin());
  std::copy(a.begin(), a.end(), buf.begin() + s.size());
}

void check_domain(std::span<const Transition* const> batch, Domain expected,
                  const char* who) {
  for (const auto* t : batch) {
    if (t->domain != expected) {
      throw DomainContamination(std::string(who) + ": transition tagged " +
                                to_string(t->domain) + ", expected " +
                                to_string(expected));
    }
  }
}

double population_std(std::span<const double> xs, double mean) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace

std::string to_string(AgentMode m) {
  switch (m) {
    case AgentMode::hybrid: return "hybrid";
    case AgentMode::sac: return "sac";
    case AgentMode::iql_offline: return "iql-offline";
  }
  return "hybrid";
}

AgentMode agent_mode_from_string(const std::string& s) {
  if (s == "hybrid") return AgentMode::hybrid;
  if (s == "sac") return AgentMode::sac;
  if (s == "iql-offline" || s == "iql_offline") return AgentMode::iql_offline;
  throw ContractViolation("unknown agent mode: " + s);
}

// -------- GaussianPolicy --------

GaussianPolicy::GaussianPolicy(Mlp net, double action_scale)
    : net_(std::move(net)), action_scale_(action_scale) {
  if (net_.output_dim() % 2 != 0) {
    throw ContractViolation("GaussianPolicy: net must emit (mean, log_std)");
  }
  if (action_scale_ <= 0.0) {
    throw ContractViolation("GaussianPolicy: action scale must be positive");
  }
}

GaussianPolicy GaussianPolicy::init(int state_dim, int action_dim,
                                    const std::vector<int>& hidden, Rng& rng,
                                    double action_scale) {
  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * action_dim);
  return {Mlp::init(sizes, Activation::relu, rng), action_scale};
}

GaussianPolicy::Head GaussianPolicy::head(std::span<const double> s,
                                          MlpScratch& ws) const {
  const auto out = net_.forward_cached(s, ws);
  const int ad = action_dim();
  Head h;
  h.raw.assign(out.begin(), out.end());
  h.mean.assign(out.begin(), out.begin() + ad);
  h.log_std.resize(ad);
  for (int i = 0; i < ad; ++i) {
    h.log_std[i] = std::clamp(out[ad + i], kLogStdMin, kLogStdMax);
  }
  return h;
}

GaussianPolicy::Sample GaussianPolicy::act_with_noise(
    std::span<const double> s, std::span<const double> noise,
    MlpScratch& ws) const {
  const int ad = action_dim();
  if (static_cast<int>(noise.size()) != ad) {
    throw ContractViolation("GaussianPolicy: noise length mismatch");
  }
  const Head h = head(s, ws);
  Sample out;
  out.noise.assign(noise.begin(), noise.end());
  out.pre_squash.resize(ad);
  out.action.resize(ad);
  out.log_prob = 0.0;
  for (int i = 0; i < ad; ++i) {
    const double sigma = std::exp(h.log_std[i]);
    const double u = h.mean[i] + sigma * noise[i];
    out.pre_squash[i] = u;
    out.action[i] = action_scale_ * std::tanh(u);
    out.log_prob += -kHalfLog2Pi - h.log_std[i] - 0.5 * noise[i] * noise[i] -
                    std::log(action_scale_) - log_one_minus_tanh_sq(u);
  }
  return out;
}

GaussianPolicy::Sample GaussianPolicy::act(std::span<const double> s, Rng& rng,
                                           MlpScratch& ws) const {
  std::vector<double> noise(action_dim());
  for (auto& n : noise) n = rng.normal();
  return act_with_noise(s, noise, ws);
}

GaussianPolicy::Sample GaussianPolicy::act_deterministic(
    std::span<const double> s, MlpScratch& ws) const {
  std::vector<double> zero(action_dim(), 0.0);
  return act_with_noise(s, zero, ws);
}

double GaussianPolicy::log_prob_of(std::span<const double> s,
                                   std::span<const double> action,
                                   MlpScratch& ws) const {
  const int ad = action_dim();
  if (static_cast<int>(action.size()) != ad) {
    throw ContractViolation("GaussianPolicy::log_prob_of: action length");
  }
  const Head h = head(s, ws);
  double lp = 0.0;
  for (int i = 0; i < ad; ++i) {
    const double t =
        std::clamp(action[i] / action_scale_, -1.0 + 1e-9, 1.0 - 1e-9);
    const double u = std::atanh(t);
    const double sigma = std::exp(h.log_std[i]);
    const double z = (u - h.mean[i]) / sigma;
    lp += -kHalfLog2Pi - h.log_std[i] - 0.5 * z * z - std::log(action_scale_) -
          log_one_minus_tanh_sq(u);
  }
  return lp;
}

// -------- mixed target --------

double mixed_target_value(double lambda, double gamma, double reward,
                          double v_next, double soft_next, bool terminal) {
  if (terminal) return reward;
  return reward + lambda * (gamma * v_next) +
         (1.0 - lambda) * (gamma * soft_next);
}

double soft_state_value(const CriticSet& critics, const GaussianPolicy& policy,
                        double beta, std::span<const double> s_next,
                        std::span<const double> noise, MlpScratch& ws) {
  const auto sample = policy.act_with_noise(s_next, noise, ws);
  std::vector<double> sa;
  append_sa(sa, s_next, sample.action);
  const double q1 = critics.q1_target.forward_cached(sa, ws)[0];
  const double q2 = critics.q2_target.forward_cached(sa, ws)[0];
  return std::min(q1, q2) - beta * sample.log_prob;
}

double mixed_target_with_noise(const MixedTargetConfig& cfg, double beta,
                               const CriticSet& critics,
                               const GaussianPolicy& policy,
                               const Transition& t,
                               std::span<const double> noise, MlpScratch& ws) {
  const double reward = t.r * cfg.reward_scale;
  if (t.terminal) return reward;
  // skipped branches are multiplied by exactly zero below
  const double v_next =
      cfg.lambda != 0.0 ? critics.v.forward_cached(t.s_next, ws)[0] : 0.0;
  const double soft_next =
      cfg.lambda != 1.0
          ? soft_state_value(critics, policy, beta, t.s_next, noise, ws)
          : 0.0;
  return mixed_target_value(cfg.lambda, cfg.gamma, reward, v_next, soft_next,
                            false);
}

double mixed_target(const MixedTargetConfig& cfg, double beta,
                    const CriticSet& critics, const GaussianPolicy& policy,
                    const Transition& t, Rng& rng, MlpScratch& ws) {
  std::vector<double> noise(policy.action_dim());
  for (auto& n : noise) n = rng.normal();
  return mixed_target_with_noise(cfg, beta, critics, policy, t, noise, ws);
}

// -------- update primitives --------

double MinCriticValue::value_and_action_grad(std::span<const double> s,
                                             std::span<const double> a,
                                             std::span<double> dq_da) {
  append_sa(sa_, s, a);
  const double v1 = q1_->forward_cached(sa_, ws_)[0];
  const double v2 = q2_->forward_cached(sa_, ws_)[0];
  const Mlp* active = v1 <= v2 ? q1_ : q2_;
  // re-run the active critic so the scratch holds its activations
  active->forward_cached(sa_, ws_);
  in_grad_.resize(sa_.size());
  const double upstream[1] = {1.0};
  active->backward(upstream, {}, in_grad_, ws_);
  std::copy(in_grad_.end() - static_cast<long>(a.size()), in_grad_.end(),
            dq_da.begin());
  return std::min(v1, v2);
}

PolicyLoss policy_loss_grad(const GaussianPolicy& policy,
                            std::span<const Transition* const> batch,
                            std::span<const double> noise, ActionValueFn& q,
                            double beta, std::span<double> grad,
                            MlpScratch& ws) {
  if (batch.empty()) throw ContractViolation("policy_loss_grad: empty batch");
  const int ad = policy.action_dim();
  if (noise.size() != batch.size() * static_cast<std::size_t>(ad)) {
    throw ContractViolation("policy_loss_grad: noise shape mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double scale = policy.action_scale();

  PolicyLoss result;
  std::vector<double> dq_da(ad), upstream(2 * ad), raw(2 * ad);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i]->s;
    const auto xi = noise.subspan(i * static_cast<std::size_t>(ad), ad);
    // act_with_noise leaves the policy activations in ws for the backward
    // pass; q uses its own scratch and does not disturb them.
    const auto sample = policy.act_with_noise(s, xi, ws);
    raw.assign(ws.acts.back().begin(), ws.acts.back().end());
    const double q_val = q.value_and_action_grad(s, sample.action, dq_da);

    result.loss += (beta * sample.log_prob - q_val) * inv_n;
    result.mean_log_prob += sample.log_prob * inv_n;

    for (int k = 0; k < ad; ++k) {
      const double u = sample.pre_squash[k];
      const double t = std::tanh(u);
      const double dsquash = scale * (1.0 - t * t);  // da/du
      const double raw_log_std = raw[ad + k];
      const double log_std = std::clamp(
          raw_log_std, GaussianPolicy::kLogStdMin, GaussianPolicy::kLogStdMax);
      const double sigma = std::exp(log_std);
      // d log pi/du = 2 tanh(u); du/dmean = 1; du/dlog_std = sigma*xi
      const double df_du = beta * 2.0 * t - dq_da[k] * dsquash;
      upstream[k] = df_du * inv_n;
      const bool inside = raw_log_std > GaussianPolicy::kLogStdMin &&
                          raw_log_std < GaussianPolicy::kLogStdMax;
      const double df_dlog_std = -beta + df_du * sigma * xi[k];
      upstream[ad + k] = inside ? df_dlog_std * inv_n : 0.0;
    }
    policy.net().backward(upstream, grad, {}, ws);
  }
  return result;
}

double awr_policy_loss_grad(const GaussianPolicy& policy,
                            std::span<const Transition* const> batch,
                            std::span<const double> q_min,
                            std::span<const double> v_vals, double temperature,
                            std::span<double> grad, MlpScratch& ws) {
  if (batch.empty()) {
    throw ContractViolation("awr_policy_loss_grad: empty batch");
  }
  if (q_min.size() != batch.size() || v_vals.size() != batch.size()) {
    throw ContractViolation("awr_policy_loss_grad: value length mismatch");
  }
  const int ad = policy.action_dim();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double scale = policy.action_scale();

  double loss = 0.0;
  std::vector<double> upstream(2 * ad);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = *batch[i];
    const double w =
        std::min(std::exp(temperature * (q_min[i] - v_vals[i])), kAwrWeightCap);

    const auto h = policy.head(t.s, ws);
    double lp = 0.0;
    for (int k = 0; k < ad; ++k) {
      const double tk =
          std::clamp(t.a[k] / scale, -1.0 + 1e-9, 1.0 - 1e-9);
      const double u = std::atanh(tk);  // fixed w.r.t. the parameters
      const double sigma = std::exp(h.log_std[k]);
      const double z = (u - h.mean[k]) / sigma;
      lp += -kHalfLog2Pi - h.log_std[k] - 0.5 * z * z - std::log(scale) -
            log_one_minus_tanh_sq(u);
      // d(-w*lp)/dmean = -w * z/sigma ; d(-w*lp)/dlog_std = -w * (z^2 - 1)
      upstream[k] = -w * (z / sigma) * inv_n;
      const double raw_log_std = h.raw[ad + k];
      const bool inside = raw_log_std > GaussianPolicy::kLogStdMin &&
                          raw_log_std < GaussianPolicy::kLogStdMax;
      upstream[ad + k] = inside ? -w * (z * z - 1.0) * inv_n : 0.0;
    }
    loss += -w * lp * inv_n;
    policy.net().backward(upstream, grad, {}, ws);
  }
  return loss;
}

// -------- Agent --------

Agent::Agent(const TaskSpec& task, const DynamicsPerturbation& sim_pert,
             AgentOptions opts, const Dataset* offline, std::uint64_t seed)
    : task_(task),
      sim_pert_(sim_pert),
      opts_(std::move(opts)),
      offline_(offline),
      rng_(seed),
      sim_env_(task, sim_pert),
      replay_(kReplayCapacity, Domain::sim) {
  // baseline modes are configuration extremes of the hybrid learner
  switch (opts_.mode) {
    case AgentMode::sac:
      opts_.mixed.lambda = 0.0;
      opts_.mixed.use_ratio = false;
      opts_.mixed.offline_fraction = 0.0;
      offline_ = nullptr;
      break;
    case AgentMode::iql_offline:
      opts_.mixed.lambda = 1.0;
      opts_.mixed.use_ratio = false;
      opts_.mixed.offline_fraction = 1.0;
      break;
    case AgentMode::hybrid:
      break;
  }

  auto& mixed = opts_.mixed;
  if (mixed.lambda < 0.0 || mixed.lambda > 1.0) {
    throw ContractViolation("Agent: lambda must lie in [0,1]");
  }
  if (mixed.gamma <= 0.0 || mixed.gamma >= 1.0) {
    throw ContractViolation("Agent: gamma must lie in (0,1)");
  }
  if (mixed.polyak <= 0.0 || mixed.polyak >= 1.0) {
    throw ContractViolation("Agent: polyak must lie in (0,1)");
  }
  if (mixed.offline_fraction < 0.0 || mixed.offline_fraction > 1.0) {
    throw ContractViolation("Agent: offline_fraction must lie in [0,1]");
  }
  if (mixed.batch_size < 1) {
    throw ContractViolation("Agent: batch_size must be positive");
  }
  if (opts_.init_beta <= 0.0) {
    throw ContractViolation("Agent: init_beta must be positive");
  }

  const int sd = task_.obs_dim();
  const int ad = RobotEnv::action_dim();
  const bool has_data = offline_ != nullptr && !offline_->empty();
  if (has_data) {
    if (offline_->state_dim != sd || offline_->action_dim != ad) {
      throw ContractViolation("Agent: dataset dimensions do not match task");
    }
  } else if (mixed.offline_fraction != 0.0 || mixed.lambda != 0.0 ||
             mixed.use_ratio) {
    throw ContractViolation(
        "Agent: an offline dataset is required unless lambda=0, "
        "use_ratio=false and offline_fraction=0");
  }

  if (mixed.target_entropy == MixedTargetConfig::kAutoTargetEntropy) {
    mixed.target_entropy = -static_cast<double>(ad);
  }

  policy_ = GaussianPolicy::init(sd, ad, opts_.hidden, rng_, kMaxTorque);
  std::vector<int> q_sizes{sd + ad};
  q_sizes.insert(q_sizes.end(), opts_.hidden.begin(), opts_.hidden.end());
  q_sizes.push_back(1);
  critics_.q1 = Mlp::init(q_sizes, Activation::relu, rng_);
  critics_.q2 = Mlp::init(q_sizes, Activation::relu, rng_);
  critics_.q1_target = critics_.q1;
  critics_.q2_target = critics_.q2;
  std::vector<int> v_sizes{sd};
  v_sizes.insert(v_sizes.end(), opts_.hidden.begin(), opts_.hidden.end());
  v_sizes.push_back(1);
  critics_.v = Mlp::init(v_sizes, Activation::relu, rng_);

  Standardizer stats = has_data ? Standardizer::fit(*offline_)
                                : Standardizer::identity(sd, ad);
  disc_ = DiscriminatorPair::init(std::move(stats), opts_.hidden, rng_);
  disc_.input_noise_std = opts_.ratio_input_noise_std;
  disc_.clip_low = opts_.ratio_clip_low;
  disc_.clip_high = opts_.ratio_clip_high;
  if (!(0.0 < disc_.clip_low && disc_.clip_low <= 1.0 &&
        1.0 <= disc_.clip_high)) {
    throw ContractViolation("Agent: ratio clip bounds need 0 < low <= 1 <= high");
  }

  log_beta_ = std::log(opts_.init_beta);

  const AdamConfig adam{.learning_rate = opts_.learning_rate};
  opt_q1_ = Adam(adam);
  opt_q2_ = Adam(adam);
  opt_v_ = Adam(adam);
  opt_pi_ = Adam(adam);
  opt_beta_ = Adam(adam);
  opt_disc_sa_ = Adam(adam);
  opt_disc_sas_ = Adam(adam);
}

double Agent::beta() const { return std::exp(log_beta_); }

void Agent::draw_noise(std::size_t rows, Rng& rng,
                       std::vector<double>& out) const {
  out.resize(rows * static_cast<std::size_t>(policy_.action_dim()));
  for (auto& n : out) n = rng.normal();
}

void Agent::interact() {
  if (env_needs_reset_) {
    obs_ = sim_env_.reset(rng_);
    env_needs_reset_ = false;
  }
  std::vector<double> action;
  if (step_ < opts_.warmup_steps) {
    action.resize(RobotEnv::action_dim());
    for (auto& a : action) a = rng_.uniform(-kMaxTorque, kMaxTorque);
  } else {
    action = policy_.act(obs_, rng_, ws_).action;
  }
  const auto outcome = sim_env_.step(action[0], rng_);

  Transition t;
  t.s = obs_;
  t.a = std::move(action);
  t.r = outcome.reward;
  t.s_next = sim_env_.observe();
  t.terminal = outcome.terminated;
  t.domain = Domain::sim;
  replay_.insert(std::move(t));

  if (outcome.done()) {
    env_needs_reset_ = true;
  } else {
    obs_ = sim_env_.observe();
  }
}

void Agent::assemble_targets(std::span<const Transition* const> batch,
                             Rng& rng, std::vector<double>& targets) {
  const int ad = policy_.action_dim();
  draw_noise(batch.size(), rng, noise_);
  targets.resize(batch.size());
  const double b = beta();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto xi =
        std::span<const double>(noise_).subspan(i * static_cast<std::size_t>(ad), ad);
    targets[i] =
        mixed_target_with_noise(opts_.mixed, b, critics_, policy_, *batch[i], xi, ws_);
    if (!std::isfinite(targets[i])) {
      throw PoisonedUpdate("q_update: non-finite bootstrap target");
    }
  }
}

double Agent::value_update_op(std::span<const Transition* const> batch) {
  return value_update(critics_.v, critics_.q1, critics_.q2, batch,
                      opts_.backbone, opt_v_, value_ws_);
}

Agent::QUpdateResult Agent::q_update_op(
    std::span<const Transition* const> offline_batch,
    std::span<const Transition* const> sim_batch, Rng& rng) {
  if (offline_batch.empty() && sim_batch.empty()) {
    throw ContractViolation("q_update: both batches empty");
  }
  check_domain(offline_batch, Domain::real, "q_update(offline)");
  check_domain(sim_batch, Domain::sim, "q_update(sim)");

  // detached targets, one shared a' draw per transition
  batch_all_.clear();
  batch_all_.insert(batch_all_.end(), offline_batch.begin(), offline_batch.end());
  batch_all_.insert(batch_all_.end(), sim_batch.begin(), sim_batch.end());
  assemble_targets(batch_all_, rng, targets_);

  QUpdateResult result;
  weights_.assign(sim_batch.size(), 1.0);
  if (!sim_batch.empty() && opts_.mixed.use_ratio) {
    for (std::size_t i = 0; i < sim_batch.size(); ++i) {
      const auto& t = *sim_batch[i];
      weights_[i] = estimate_ratio(disc_, t.s, t.a, t.s_next, disc_ws_);
    }
  }
  if (!weights_.empty()) {
    double sum = 0.0, lo = weights_[0], hi = weights_[0];
    for (double w : weights_) {
      sum += w;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    result.ratio_mean = sum / static_cast<double>(weights_.size());
    result.ratio_min = lo;
    result.ratio_max = hi;
  }

  const double inv_off =
      offline_batch.empty() ? 0.0 : 1.0 / static_cast<double>(offline_batch.size());
  const double inv_sim =
      sim_batch.empty() ? 0.0 : 1.0 / static_cast<double>(sim_batch.size());

  double upstream[1];
  auto critic_pass = [&](Mlp& q, Adam& opt) {
    grad_.assign(q.param_count(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch_all_.size(); ++i) {
      const auto& t = *batch_all_[i];
      append_sa(sa_, t.s, t.a);
      const double pred = q.forward_cached(sa_, ws_)[0];
      const double err = pred - targets_[i];
      const bool is_sim = i >= offline_batch.size();
      const double w = is_sim ? weights_[i - offline_batch.size()] : 1.0;
      const double coeff = is_sim ? w * inv_sim : inv_off;
      loss += coeff * err * err;
      upstream[0] = 2.0 * coeff * err;
      q.backward(upstream, grad_, {}, ws_);
    }
    opt.step(q.params(), grad_);
    return loss;
  };

  const double l1 = critic_pass(critics_.q1, opt_q1_);
  const double l2 = critic_pass(critics_.q2, opt_q2_);
  result.loss = 0.5 * (l1 + l2);
  return result;
}

PolicyLoss Agent::policy_update_op(std::span<const Transition* const> batch,
                                   Rng& rng) {
  if (opts_.mode == AgentMode::iql_offline) {
    check_domain(batch, Domain::real, "policy_update(awr)");
    // detached advantage weights from the current critics and anchor
    q_min_.resize(batch.size());
    v_vals_.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& t = *batch[i];
      append_sa(sa_, t.s, t.a);
      const double q1 = critics_.q1.forward_cached(sa_, ws_)[0];
      const double q2 = critics_.q2.forward_cached(sa_, ws_)[0];
      q_min_[i] = std::min(q1, q2);
      v_vals_[i] = critics_.v.forward_cached(t.s, ws_)[0];
    }
    grad_.assign(policy_.net().param_count(), 0.0);
    PolicyLoss out;
    out.loss = awr_policy_loss_grad(policy_, batch, q_min_, v_vals_,
                                    opts_.awr_temperature, grad_, ws_);
    opt_pi_.step(policy_.net().params(), grad_);
    return out;
  }

  draw_noise(batch.size(), rng, noise_);
  MinCriticValue q_fn(critics_.q1, critics_.q2);
  grad_.assign(policy_.net().param_count(), 0.0);
  const PolicyLoss out =
      policy_loss_grad(policy_, batch, noise_, q_fn, beta(), grad_, ws_);
  opt_pi_.step(policy_.net().params(), grad_);
  return out;
}

double Agent::temperature_update_op(double mean_log_prob) {
  const double g =
      -beta() * (mean_log_prob + opts_.mixed.target_entropy);
  const double grad[1] = {g};
  opt_beta_.step(std::span<double>(&log_beta_, 1), grad);
  return beta();
}

double Agent::temperature_update_batch(
    std::span<const Transition* const> batch, Rng& rng) {
  if (batch.empty()) {
    throw ContractViolation("temperature_update: empty batch");
  }
  double mean_lp = 0.0;
  for (const auto* t : batch) {
    mean_lp += policy_.act(t->s, rng, ws_).log_prob;
  }
  mean_lp /= static_cast<double>(batch.size());
  return temperature_update_op(mean_lp);
}

void Agent::polyak_step() {
  polyak_update(critics_.q1_target, critics_.q1, opts_.mixed.polyak);
  polyak_update(critics_.q2_target, critics_.q2, opts_.mixed.polyak);
}

StepMetrics Agent::train_step() {
  const bool has_data = offline_ != nullptr && !offline_->empty();
  const int bs = opts_.mixed.batch_size;
  const int n_off =
      has_data ? static_cast<int>(
                     std::lround(opts_.mixed.offline_fraction * bs))
               : 0;
  const int n_sim = opts_.mode == AgentMode::iql_offline ? 0 : bs - n_off;

  StepMetrics m;
  m.step = step_ + 1;

  if (opts_.mode != AgentMode::iql_offline) {
    interact();
  }

  // discriminators co-train with the agent, one step each
  if (has_data && opts_.mixed.use_ratio) {
    sample_offline(bs, batch_a_);
    replay_.sample(bs, rng_, batch_b_);
    const auto losses = discriminator_update(disc_, batch_a_, batch_b_,
                                             opt_disc_sa_, opt_disc_sas_,
                                             rng_, disc_ws_);
    (void)losses;
  }

  // in-sample anchor, real data only
  if (has_data && opts_.mixed.lambda != 0.0) {
    sample_offline(bs, batch_a_);
    m.v_loss = value_update_op(batch_a_);
  }

  // critics on the mixed batch
  sample_offline(n_off, batch_a_);
  if (n_sim > 0) {
    replay_.sample(static_cast<std::size_t>(n_sim), rng_, batch_b_);
  } else {
    batch_b_.clear();
  }
  const auto q_res = q_update_op(batch_a_, batch_b_, rng_);
  m.q_loss = q_res.loss;
  m.ratio_mean = q_res.ratio_mean;
  m.ratio_max = q_res.ratio_max;
  m.ratio_min = q_res.ratio_min;

  // policy on a fresh mixed batch
  sample_offline(n_off, batch_a_);
  if (n_sim > 0) {
    replay_.sample(static_cast<std::size_t>(n_sim), rng_, batch_b_);
    batch_a_.insert(batch_a_.end(), batch_b_.begin(), batch_b_.end());
  }
  const auto pi_res = policy_update_op(batch_a_, rng_);
  m.pi_loss = pi_res.loss;

  if (opts_.mode != AgentMode::iql_offline) {
    temperature_update_op(pi_res.mean_log_prob);
  }
  m.beta = beta();

  polyak_step();

  ++step_;
  return m;
}

void Agent::sample_offline(int k, std::vector<const Transition*>& out) {
  out.clear();
  if (k <= 0) return;
  if (offline_ == nullptr || offline_->empty()) {
    throw ContractViolation("Agent: offline batch requested without data");
  }
  out.resize(static_cast<std::size_t>(k));
  for (auto& slot : out) {
    slot = &offline_->items[rng_.below(offline_->size())];
  }
}

EvalResult evaluate_policy(const GaussianPolicy& policy, const TaskSpec& task,
                           int n_episodes, Rng& rng) {
  if (n_episodes < 1) {
    throw ContractViolation("evaluate: n_episodes must be >= 1");
  }
  RobotEnv env(task, DynamicsPerturbation{});  // reference dynamics
  MlpScratch ws;
  std::vector<double> returns(static_cast<std::size_t>(n_episodes));
  for (auto& ret : returns) {
    std::vector<double> obs = env.reset(rng);
    ret = 0.0;
    for (;;) {
      const auto sample = policy.act_deterministic(obs, ws);
      const auto outcome = env.step(sample.action[0], rng);
      ret += outcome.reward;
      if (outcome.done()) break;
      obs = env.observe();
    }
  }
  EvalResult out;
  out.episodes = n_episodes;
  double sum = 0.0;
  for (double r : returns) sum += r;
  out.mean = sum / static_cast<double>(n_episodes);
  out.stddev = population_std(returns, out.mean);
  return out;
}

EvalResult Agent::evaluate(int n_episodes, Rng& rng) const {
  return evaluate_policy(policy_, task_, n_episodes, rng);
}

void Agent::save_checkpoint(const std::string& dir,
                            const std::string& manifest_extra_json) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const char* name) {
    return (fs::path(dir) / name).string();
  };
  policy_.net().save_file(path("policy.bin"));
  critics_.q1.save_file(path("q1.bin"));
  critics_.q2.save_file(path("q2.bin"));
  critics_.q1_target.save_file(path("q1_target.bin"));
  critics_.q2_target.save_file(path("q2_target.bin"));
  critics_.v.save_file(path("v.bin"));
  disc_.sa_net.save_file(path("disc_sa.bin"));
  disc_.sas_net.save_file(path("disc_sas.bin"));

  nlohmann::json manifest;
  manifest["step_count"] = step_;
  manifest["beta"] = beta();
  manifest["rng_state"] = rng_.state();
  manifest["action_scale"] = policy_.action_scale();
  manifest["mode"] = to_string(opts_.mode);
  manifest["task"] = to_string(task_.task);
  manifest["nets"] = {"policy", "q1", "q2", "q1_target", "q2_target",
                      "v", "disc_sa", "disc_sas"};
  manifest["standardizer"] = {
      {"state_mean", disc_.stats.state_mean},
      {"state_inv_std", disc_.stats.state_inv_std},
      {"action_mean", disc_.stats.action_mean},
      {"action_inv_std", disc_.stats.action_inv_std},
  };
  if (!manifest_extra_json.empty()) {
    manifest.update(nlohmann::json::parse(manifest_extra_json));
  }
  std::ofstream out(path("manifest.json"));
  out << manifest.dump(2) << '\n';
}

}  // namespace simbridge
