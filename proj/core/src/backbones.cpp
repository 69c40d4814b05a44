#include "simbridge/backbones.hpp"

#include <algorithm>
#include <cmath>

#include "simbridge/errors.hpp"

namespace simbridge {

std::string to_string(BackboneKind k) {
  switch (k) {
    case BackboneKind::expectile: return "expectile";
    case BackboneKind::sql: return "sql";
    case BackboneKind::eql: return "eql";
  }
  return "expectile";
}

BackboneKind backbone_from_string(const std::string& s) {
  if (s == "expectile") return BackboneKind::expectile;
  if (s == "sql") return BackboneKind::sql;
  if (s == "eql") return BackboneKind::eql;
  throw ContractViolation("unknown backbone kind: " + s);
}

ResidualLoss value_residual_loss(const BackboneSpec& spec, double y) {
  ResidualLoss out;
  switch (spec.kind) {
    case BackboneKind::expectile: {
      const double weight = std::abs(spec.tau - (y < 0.0 ? 1.0 : 0.0));
      out.value = weight * y * y;
      out.slope = 2.0 * weight * y;
      break;
    }
    case BackboneKind::sql: {
      const double u = 1.0 + y / (2.0 * spec.alpha);
      if (u > 0.0) {
        out.value = u * u - y / spec.alpha;
        out.slope = u / spec.alpha - 1.0 / spec.alpha;
      } else {
        out.value = -y / spec.alpha;
        out.slope = -1.0 / spec.alpha;
      }
      break;
    }
    case BackboneKind::eql: {
      const double z = std::min(y / spec.alpha, 20.0);
      const double e = std::exp(z);
      out.value = e - y / spec.alpha;
      // derivative of the clamped expression: the exp term freezes past the
      // clamp, the linear term does not
      out.slope = (z < 20.0 ? e / spec.alpha : 0.0) - 1.0 / spec.alpha;
      break;
    }
  }
  return out;
}

double value_loss_grad(const Mlp& v, std::span<const Transition* const> batch,
                       std::span<const double> q_min, const BackboneSpec& spec,
                       std::span<double> grad, MlpScratch& ws) {
  if (batch.empty()) throw ContractViolation("value_loss_grad: empty batch");
  if (q_min.size() != batch.size()) {
    throw ContractViolation("value_loss_grad: q_min length mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  double upstream[1];
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto value = v.forward_cached(batch[i]->s, ws);
    const auto rl = value_residual_loss(spec, q_min[i] - value[0]);
    total += rl.value;
    upstream[0] = -rl.slope * inv_n;  // d loss/d V(s) = -d loss/d y
    v.backward(upstream, grad, {}, ws);
  }
  return total * inv_n;
}

double value_update(Mlp& v, const Mlp& q1, const Mlp& q2,
                    std::span<const Transition* const> batch,
                    const BackboneSpec& spec, Adam& opt,
                    ValueUpdateScratch& ws) {
  if (batch.empty()) throw ContractViolation("value_update: empty batch");
  for (const auto* t : batch) {
    if (t->domain != Domain::real) {
      throw DomainContamination(
          "value_update: sim-tagged transition in a real-only batch");
    }
  }

  // detached pessimistic critic values at the dataset actions
  ws.q_min.resize(batch.size());
  const std::size_t sa_dim = batch[0]->s.size() + batch[0]->a.size();
  ws.sa.resize(sa_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = *batch[i];
    std::copy(t.s.begin(), t.s.end(), ws.sa.begin());
    std::copy(t.a.begin(), t.a.end(), ws.sa.begin() + t.s.size());
    const double a = q1.forward_cached(ws.sa, ws.fwd)[0];
    const double b = q2.forward_cached(ws.sa, ws.fwd)[0];
    ws.q_min[i] = std::min(a, b);
  }

  ws.grad.assign(v.param_count(), 0.0);
  const double loss = value_loss_grad(v, batch, ws.q_min, spec, ws.grad, ws.fwd);
  opt.step(v.params(), ws.grad);
  return loss;
}

}  // namespace simbridge
