#pragma once

#include "percbf/common.hpp"
#include "percbf/network/dual_net.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace percbf {

// Executable forms of the two sampling results: prioritized L1 gradients are a
// rescaled uniform L2 gradient, and L2 first reaches an error level >= 1 no later
// than L1 when starting above 1.

struct GradientIdentity {
  Vector prioritized_l1;  // c * E_prio[grad |F - y|]
  Vector uniform_l2;      // E_unif[grad (F - y)^2 / 2]
  double max_error = 0.0;
};

/**
 * Exact (full-buffer) expectations for residuals r_i = F(x_i) - y_i with
 * per-sample gradients grad F(x_i). Sampling weights are |r_i|^alpha_p and
 * c = mean |r_i|. The two sides agree exactly for alpha_p = 1.
 */
inline GradientIdentity gradient_identity(std::span<const double> residuals, std::span<const Vector> grads,
                                          double alpha_p = 1.0) {
  if (residuals.empty() || residuals.size() != grads.size())
    throw ShapeError("gradient_identity: residuals and gradients differ in length");
  const auto n = static_cast<double>(residuals.size());
  double weight_sum = 0.0, abs_sum = 0.0;
  for (double r : residuals) {
    if (r == 0.0) throw Error("gradient_identity: zero residual (sign undefined)");
    weight_sum += std::pow(std::abs(r), alpha_p);
    abs_sum += std::abs(r);
  }
  const double c = abs_sum / n;
  GradientIdentity out;
  out.prioritized_l1 = Vector::Zero(grads[0].size());
  out.uniform_l2 = Vector::Zero(grads[0].size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const double r = residuals[i];
    const double p = std::pow(std::abs(r), alpha_p) / weight_sum;
    out.prioritized_l1 += p * (r > 0.0 ? 1.0 : -1.0) * grads[i];
    out.uniform_l2 += (r / n) * grads[i];
  }
  out.prioritized_l1 *= c;
  out.max_error = (out.prioritized_l1 - out.uniform_l2).cwiseAbs().maxCoeff();
  return out;
}

/// Identity check on a network's value output over a synthetic buffer.
inline GradientIdentity theorem1_check(const DualNet<double>& net, std::span<const Vector> xs,
                                       std::span<const double> ys, double alpha_p = 1.0) {
  if (xs.size() != ys.size()) throw ShapeError("theorem1_check: inputs and labels differ in length");
  std::vector<double> residuals;
  std::vector<Vector> grads;
  const double one = 1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    residuals.push_back(net.value(xs[i]) - ys[i]);
    grads.push_back(net.param_grad(xs.subspan(i, 1), std::span<const double>(&one, 1), {}));
  }
  return gradient_identity(residuals, grads, alpha_p);
}

enum class ErrorLoss { L1, L2 };

/**
 * Steps of discretised gradient descent on the scalar model F = theta with
 * label 0 until |theta| <= target, starting from theta = delta0:
 *   L1: theta -= eta * sgn(theta)      L2 (half squared): theta -= eta * theta
 * Returns nullopt if not reached within max_steps. Throws on a divergent L2 step.
 */
inline std::optional<long> first_passage(ErrorLoss loss, double eta, double delta0, double target,
                                         long max_steps = 10'000'000) {
  if (!(eta > 0.0)) throw ConfigError("learning rate must be positive");
  if (loss == ErrorLoss::L2 && eta >= 2.0) throw Error("L2 gradient flow diverges for eta >= 2");
  double theta = delta0;
  for (long t = 0; t <= max_steps; ++t) {
    if (std::abs(theta) <= target) return t;
    if (loss == ErrorLoss::L1) theta -= eta * (theta > 0.0 ? 1.0 : (theta < 0.0 ? -1.0 : 0.0));
    else theta -= eta * theta;
  }
  return std::nullopt;
}

struct PassageTimes {
  std::optional<long> l1;
  std::optional<long> l2;
};

inline PassageTimes theorem2_check(double eta, double delta0, double target) {
  return {first_passage(ErrorLoss::L1, eta, delta0, target), first_passage(ErrorLoss::L2, eta, delta0, target)};
}

struct OrderingScan {
  bool exists = false;    // some target in the grid has t_L2 <= t_L1
  double target = 0.0;    // largest such target
  PassageTimes times;
};

/// Scans targets k / grid for k = grid..1 looking for t_L2 <= t_L1.
inline OrderingScan theorem2_scan(double eta, double delta0, int grid = 1000) {
  OrderingScan out;
  for (int k = grid; k >= 1; --k) {
    const double target = static_cast<double>(k) / grid;
    const PassageTimes t = theorem2_check(eta, delta0, target);
    if (t.l2 && (!t.l1 || *t.l2 <= *t.l1)) {
      out = {true, target, t};
      return out;
    }
  }
  return out;
}

}  // namespace percbf
