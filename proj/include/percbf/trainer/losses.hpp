#pragma once

#include "percbf/common.hpp"
#include "percbf/replay/transition.hpp"
#include "percbf/safety/barrier.hpp"
#include "percbf/trainer/config.hpp"

#include <vector>

namespace percbf {

struct LossBatches {
  std::vector<const Transition*> safe;
  std::vector<const Transition*> unsafe;
  std::vector<const Transition*> grad;
};

/// Per-sample partials of the total loss with respect to the residual's value
/// and input gradient, ready for DualNet::param_grad.
struct LossPartials {
  std::vector<Vector> inputs;
  std::vector<double> dvalue;
  std::vector<Vector> dgrad;
};

struct LossTerms {
  double safe = 0.0;
  double unsafe = 0.0;
  double grad = 0.0;
  double total = 0.0;
  std::vector<double> safe_hinge;
  std::vector<double> unsafe_hinge;
  std::vector<double> grad_hinge;
};

/// Hinge argument of the constraint loss for one sample.
inline double grad_hinge_argument(const BarrierValue& h, const Vector& xdot, const ClassK& alpha,
                                  GradLossForm form) {
  const double lie = h.gradient.dot(xdot);
  return form == GradLossForm::ConditionViolation ? -lie - alpha(h.value) : lie - alpha(h.value);
}

/**
 * Batch losses
 *   L+ = mean max(0, d - h~),  L- = mean max(0, h~ - d),
 *   Lgrad = mean of the constraint hinge,  L = L+ + lambda L- + Lgrad.
 * Each mean is over its own batch; an empty batch contributes 0. A hinge at
 * exactly zero is inactive (zero value, zero gradient).
 */
inline LossTerms compute_losses(const LossBatches& batches, const LearnedCbf& cbf, double lambda,
                                const ClassK& alpha, GradLossForm form, LossPartials* partials = nullptr) {
  LossTerms out;
  const Vector no_grad;
  auto record = [&](const Vector& x, double dv, const Vector* dg) {
    if (partials == nullptr) return;
    partials->inputs.push_back(x);
    partials->dvalue.push_back(dv);
    partials->dgrad.push_back(dg != nullptr ? *dg : Vector::Zero(x.size()));
  };

  if (!batches.safe.empty()) {
    const double inv_b = 1.0 / static_cast<double>(batches.safe.size());
    for (const Transition* t : batches.safe) {
      const double arg = t->distance - cbf(t->state).value;
      const double hinge = arg > 0.0 ? arg : 0.0;
      out.safe_hinge.push_back(hinge);
      out.safe += hinge * inv_b;
      if (hinge > 0.0) record(t->state, -inv_b, nullptr);
    }
  }
  if (!batches.unsafe.empty()) {
    const double inv_b = 1.0 / static_cast<double>(batches.unsafe.size());
    for (const Transition* t : batches.unsafe) {
      const double arg = cbf(t->state).value - t->distance;
      const double hinge = arg > 0.0 ? arg : 0.0;
      out.unsafe_hinge.push_back(hinge);
      out.unsafe += hinge * inv_b;
      if (hinge > 0.0) record(t->state, lambda * inv_b, nullptr);
    }
  }
  if (!batches.grad.empty()) {
    const double inv_b = 1.0 / static_cast<double>(batches.grad.size());
    for (const Transition* t : batches.grad) {
      const BarrierValue h = cbf(t->state);
      const double arg = grad_hinge_argument(h, t->state_derivative, alpha, form);
      const double hinge = arg > 0.0 ? arg : 0.0;
      out.grad_hinge.push_back(hinge);
      out.grad += hinge * inv_b;
      if (hinge > 0.0) {
        const double sign = form == GradLossForm::ConditionViolation ? -1.0 : 1.0;
        const Vector dg = (sign * inv_b) * t->state_derivative;
        record(t->state, -alpha.gain * inv_b, &dg);
      }
    }
  }
  out.total = out.safe + lambda * out.unsafe + out.grad;
  return out;
}

/// Raw priorities are the per-sample hinge values of the same forward pass.
inline std::vector<double> compute_priorities(const std::vector<double>& hinges) { return hinges; }

}  // namespace percbf
