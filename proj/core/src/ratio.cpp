#include "simbridge/ratio.hpp"

#include <algorithm>
#include <cmath>

#include "simbridge/errors.hpp"

namespace simbridge {

namespace {

constexpr double kProbFloor = 1e-6;

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 30.0) return z;
  return std::log1p(std::exp(z));
}

void fit_moments(std::vector<double>& mean, std::vector<double>& inv_std,
                 int dim, const std::vector<const std::vector<double>*>& cols) {
  mean.assign(dim, 0.0);
  inv_std.assign(dim, 1.0);
  const double n = static_cast<double>(cols.size());
  if (cols.empty()) return;
  for (const auto* v : cols) {
    for (int d = 0; d < dim; ++d) mean[d] += (*v)[d];
  }
  for (int d = 0; d < dim; ++d) mean[d] /= n;
  std::vector<double> var(dim, 0.0);
  for (const auto* v : cols) {
    for (int d = 0; d < dim; ++d) {
      const double c = (*v)[d] - mean[d];
      var[d] += c * c;
    }
  }
  for (int d = 0; d < dim; ++d) {
    inv_std[d] = 1.0 / std::max(std::sqrt(var[d] / n), 1e-8);
  }
}

}  // namespace

Standardizer Standardizer::fit(const Dataset& ds) {
  if (ds.empty()) throw ContractViolation("Standardizer::fit: empty dataset");
  Standardizer st;
  std::vector<const std::vector<double>*> cols;
  cols.reserve(2 * ds.size());
  for (const auto& t : ds.items) {
    cols.push_back(&t.s);
    cols.push_back(&t.s_next);
  }
  fit_moments(st.state_mean, st.state_inv_std, ds.state_dim, cols);
  cols.clear();
  for (const auto& t : ds.items) cols.push_back(&t.a);
  fit_moments(st.action_mean, st.action_inv_std, ds.action_dim, cols);
  return st;
}

Standardizer Standardizer::identity(int state_dim, int action_dim) {
  Standardizer st;
  st.state_mean.assign(state_dim, 0.0);
  st.state_inv_std.assign(state_dim, 1.0);
  st.action_mean.assign(action_dim, 0.0);
  st.action_inv_std.assign(action_dim, 1.0);
  return st;
}

void Standardizer::encode_sa(std::span<const double> s,
                             std::span<const double> a,
                             std::span<double> out) const {
  const int sd = state_dim(), ad = action_dim();
  if (static_cast<int>(s.size()) != sd || static_cast<int>(a.size()) != ad ||
      static_cast<int>(out.size()) != sd + ad) {
    throw ContractViolation("Standardizer::encode_sa: dimension mismatch");
  }
  for (int d = 0; d < sd; ++d) out[d] = (s[d] - state_mean[d]) * state_inv_std[d];
  for (int d = 0; d < ad; ++d) {
    out[sd + d] = (a[d] - action_mean[d]) * action_inv_std[d];
  }
}

void Standardizer::encode_sas(std::span<const double> s,
                              std::span<const double> a,
                              std::span<const double> s_next,
                              std::span<double> out) const {
  const int sd = state_dim(), ad = action_dim();
  if (static_cast<int>(out.size()) != 2 * sd + ad ||
      static_cast<int>(s_next.size()) != sd) {
    throw ContractViolation("Standardizer::encode_sas: dimension mismatch");
  }
  encode_sa(s, a, out.subspan(0, sd + ad));
  for (int d = 0; d < sd; ++d) {
    out[sd + ad + d] = (s_next[d] - state_mean[d]) * state_inv_std[d];
  }
}

double bce_with_logit(double logit, double label) {
  return softplus(logit) - label * logit;
}

double bce_slope(double logit, double label) {
  return sigmoid(logit) - label;
}

DiscriminatorPair DiscriminatorPair::init(Standardizer stats,
                                          const std::vector<int>& hidden,
                                          Rng& rng) {
  const int sd = stats.state_dim(), ad = stats.action_dim();
  DiscriminatorPair pair;
  std::vector<int> sa_sizes{sd + ad};
  sa_sizes.insert(sa_sizes.end(), hidden.begin(), hidden.end());
  sa_sizes.push_back(1);
  std::vector<int> sas_sizes{2 * sd + ad};
  sas_sizes.insert(sas_sizes.end(), hidden.begin(), hidden.end());
  sas_sizes.push_back(1);
  pair.sa_net = Mlp::init(sa_sizes, Activation::relu, rng);
  pair.sas_net = Mlp::init(sas_sizes, Activation::relu, rng);
  pair.stats = std::move(stats);
  return pair;
}

double DiscriminatorPair::sa_logit(std::span<const double> s,
                                   std::span<const double> a,
                                   DiscScratch& ws) const {
  ws.input.resize(sa_net.input_dim());
  stats.encode_sa(s, a, ws.input);
  return sa_net.forward_cached(ws.input, ws.fwd)[0];
}

double DiscriminatorPair::sas_logit(std::span<const double> s,
                                    std::span<const double> a,
                                    std::span<const double> s_next,
                                    DiscScratch& ws) const {
  ws.input.resize(sas_net.input_dim());
  stats.encode_sas(s, a, s_next, ws.input);
  return sas_net.forward_cached(ws.input, ws.fwd)[0];
}

DiscriminatorLosses discriminator_update(
    DiscriminatorPair& pair, std::span<const Transition* const> real_batch,
    std::span<const Transition* const> sim_batch, Adam& sa_opt, Adam& sas_opt,
    Rng& rng, DiscScratch& ws) {
  if (real_batch.empty() || sim_batch.empty()) {
    throw ContractViolation("discriminator_update: batches must be non-empty");
  }
  for (const auto* t : real_batch) {
    if (t->domain != Domain::real) {
      throw DomainContamination("discriminator_update: sim record in real batch");
    }
  }
  for (const auto* t : sim_batch) {
    if (t->domain != Domain::sim) {
      throw DomainContamination("discriminator_update: real record in sim batch");
    }
  }

  ws.grad_sa.assign(pair.sa_net.param_count(), 0.0);
  ws.grad_sas.assign(pair.sas_net.param_count(), 0.0);
  const double inv_n =
      1.0 / static_cast<double>(real_batch.size() + sim_batch.size());

  DiscriminatorLosses losses;
  double upstream[1];
  auto accumulate = [&](const Transition& t, double label) {
    // (s,a) head
    ws.input.resize(pair.sa_net.input_dim());
    pair.stats.encode_sa(t.s, t.a, ws.input);
    if (pair.input_noise_std > 0.0) {
      for (auto& x : ws.input) x += rng.normal(0.0, pair.input_noise_std);
    }
    double logit = pair.sa_net.forward_cached(ws.input, ws.fwd)[0];
    losses.sa += bce_with_logit(logit, label) * inv_n;
    upstream[0] = bce_slope(logit, label) * inv_n;
    pair.sa_net.backward(upstream, ws.grad_sa, {}, ws.fwd);

    // (s,a,s') head
    ws.input.resize(pair.sas_net.input_dim());
    pair.stats.encode_sas(t.s, t.a, t.s_next, ws.input);
    if (pair.input_noise_std > 0.0) {
      for (auto& x : ws.input) x += rng.normal(0.0, pair.input_noise_std);
    }
    logit = pair.sas_net.forward_cached(ws.input, ws.fwd)[0];
    losses.sas += bce_with_logit(logit, label) * inv_n;
    upstream[0] = bce_slope(logit, label) * inv_n;
    pair.sas_net.backward(upstream, ws.grad_sas, {}, ws.fwd);
  };

  for (const auto* t : real_batch) accumulate(*t, 1.0);
  for (const auto* t : sim_batch) accumulate(*t, 0.0);

  sa_opt.step(pair.sa_net.params(), ws.grad_sa);
  sas_opt.step(pair.sas_net.params(), ws.grad_sas);
  return losses;
}

double ratio_from_probs(double p_sa, double p_sas) {
  return ((1.0 - p_sa) / p_sa) * (p_sas / (1.0 - p_sas));
}

double estimate_ratio_unclipped(const DiscriminatorPair& pair,
                                std::span<const double> s,
                                std::span<const double> a,
                                std::span<const double> s_next,
                                DiscScratch& ws) {
  const double p_sa = std::clamp(sigmoid(pair.sa_logit(s, a, ws)), kProbFloor,
                                 1.0 - kProbFloor);
  const double p_sas = std::clamp(sigmoid(pair.sas_logit(s, a, s_next, ws)),
                                  kProbFloor, 1.0 - kProbFloor);
  return ratio_from_probs(p_sa, p_sas);
}

double estimate_ratio(const DiscriminatorPair& pair, std::span<const double> s,
                      std::span<const double> a,
                      std::span<const double> s_next, DiscScratch& ws) {
  return std::clamp(estimate_ratio_unclipped(pair, s, a, s_next, ws),
                    pair.clip_low, pair.clip_high);
}

}  // namespace simbridge
