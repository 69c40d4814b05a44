#pragma once

#include <span>
#include <vector>

#include "simbridge/data.hpp"
#include "simbridge/nets.hpp"
#include "simbridge/optim.hpp"

namespace simbridge {

// Per-dimension affine normalization fitted once on the offline dataset
// (states pooled with next states). Keeps discriminator training scale-free.
struct Standardizer {
  std::vector<double> state_mean, state_inv_std;
  std::vector<double> action_mean, action_inv_std;

  static Standardizer fit(const Dataset& ds);
  static Standardizer identity(int state_dim, int action_dim);

  int state_dim() const { return static_cast<int>(state_mean.size()); }
  int action_dim() const { return static_cast<int>(action_mean.size()); }

  // out must be state_dim + action_dim long.
  void encode_sa(std::span<const double> s, std::span<const double> a,
                 std::span<double> out) const;
  // out must be 2*state_dim + action_dim long.
  void encode_sas(std::span<const double> s, std::span<const double> a,
                  std::span<const double> s_next, std::span<double> out) const;
};

// Binary cross-entropy on a logit: softplus(z) - label*z.
double bce_with_logit(double logit, double label);
double bce_slope(double logit, double label);  // sigmoid(z) - label

struct DiscScratch {
  MlpScratch fwd;
  std::vector<double> grad_sa, grad_sas;
  std::vector<double> input;
};

// Pair of domain classifiers over standardized inputs: one on (s,a), one on
// (s,a,s'). Their calibrated odds compose into the dynamics ratio.
struct DiscriminatorPair {
  Mlp sa_net;   // (s,a) -> single logit
  Mlp sas_net;  // (s,a,s') -> single logit
  Standardizer stats;
  double input_noise_std = 0.1;  // training-time smoothing, standardized units
  double clip_low = 0.01;
  double clip_high = 100.0;

  static DiscriminatorPair init(Standardizer stats,
                                const std::vector<int>& hidden, Rng& rng);

  double sa_logit(std::span<const double> s, std::span<const double> a,
                  DiscScratch& ws) const;
  double sas_logit(std::span<const double> s, std::span<const double> a,
                   std::span<const double> s_next, DiscScratch& ws) const;
};

struct DiscriminatorLosses {
  double sa = 0.0;
  double sas = 0.0;
};

// One binary-cross-entropy step per net: label 1 for real transitions, 0 for
// simulated ones, inputs perturbed by Normal(0, input_noise_std^2) smoothing
// noise. Both batches must be non-empty and correctly tagged.
DiscriminatorLosses discriminator_update(
    DiscriminatorPair& pair, std::span<const Transition* const> real_batch,
    std::span<const Transition* const> sim_batch, Adam& sa_opt, Adam& sas_opt,
    Rng& rng, DiscScratch& ws);

// Odds-ratio composition of the two classifier probabilities:
//   w = [(1-p_sa)/p_sa] * [p_sas/(1-p_sas)].
double ratio_from_probs(double p_sa, double p_sas);

// Probabilities are sigmoids of the logits clamped into [1e-6, 1-1e-6].
double estimate_ratio_unclipped(const DiscriminatorPair& pair,
                                std::span<const double> s,
                                std::span<const double> a,
                                std::span<const double> s_next,
                                DiscScratch& ws);

// Unclipped estimate clipped into [clip_low, clip_high].
double estimate_ratio(const DiscriminatorPair& pair, std::span<const double> s,
                      std::span<const double> a,
                      std::span<const double> s_next, DiscScratch& ws);

}  // namespace simbridge
