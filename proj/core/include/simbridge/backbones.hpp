#pragma once

#include <span>
#include <string>
#include <vector>

#include "simbridge/data.hpp"
#include "simbridge/nets.hpp"
#include "simbridge/optim.hpp"

namespace simbridge {

// Pluggable in-sample state-value losses. `expectile` needs tau, the other
// two need the temperature alpha.
enum class BackboneKind { expectile, sql, eql };

std::string to_string(BackboneKind k);
BackboneKind backbone_from_string(const std::string& s);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::expectile;
  double tau = 0.7;
  double alpha = 1.0;
};

struct ResidualLoss {
  double value = 0.0;
  double slope = 0.0;  // d value / d y
};

// Loss on the residual y = Q(s,a) - V(s) and its exact derivative.
//   expectile: |tau - 1(y<0)| * y^2
//   sql:       1(1 + y/2a > 0) * (1 + y/2a)^2 - y/a
//   eql:       exp(y/a) - y/a, with y/a clamped to <= 20 before exp
ResidualLoss value_residual_loss(const BackboneSpec& spec, double y);

struct ValueUpdateScratch {
  MlpScratch fwd;
  std::vector<double> grad;
  std::vector<double> q_min;
  std::vector<double> sa;
};

// Mean backbone loss over the batch and its gradient w.r.t. the value
// network, with the critic values `q_min` taken as detached constants.
// Accumulates into `grad`.
double value_loss_grad(const Mlp& v, std::span<const Transition* const> batch,
                       std::span<const double> q_min, const BackboneSpec& spec,
                       std::span<double> grad, MlpScratch& scratch);

// One optimizer step of the in-sample value objective. Every transition must
// be tagged Domain::real; a sim-tagged record raises DomainContamination
// before any computation. Q is the minimum of the twin critics, detached.
// Returns the mean loss.
double value_update(Mlp& v, const Mlp& q1, const Mlp& q2,
                    std::span<const Transition* const> batch,
                    const BackboneSpec& spec, Adam& opt,
                    ValueUpdateScratch& ws);

}  // namespace simbridge
