#pragma once

#include "percbf/common.hpp"
#include "percbf/network/dual_net.hpp"

#include <cmath>
#include <functional>

namespace percbf {

/// Barrier value and its gradient with respect to the state.
struct BarrierValue {
  double value = 0.0;
  Vector gradient;
};

/// Linear extended class-K function alpha(h) = gain * h.
struct ClassK {
  double gain = 1.0;

  explicit ClassK(double g = 1.0) : gain(g) {
    if (!(gain > 0.0)) throw ConfigError("class-K gain must be positive");
  }
  double operator()(double h) const { return gain * h; }
};

/// Lookahead-point barrier for a circular obstacle of radius r centred at the
/// origin: the point l ahead of the unicycle must stay outside the circle.
inline BarrierValue hcbf_unicycle(const Vector& x, double r, double l) {
  const double px = x[0], py = x[1], phi = x[2];
  const double c = std::cos(phi), s = std::sin(phi);
  BarrierValue out;
  out.value = px * px + py * py + 2.0 * px * l * c + 2.0 * py * l * s + l * l - r * r;
  out.gradient.resize(3);
  out.gradient << 2.0 * px + 2.0 * l * c, 2.0 * py + 2.0 * l * s, -2.0 * px * l * s + 2.0 * py * l * c;
  return out;
}

/// Planar chain kinematics needed by the arm barrier.
template <typename K>
concept PlanarKinematics = requires(const K& k, const Vector2& q, int i) {
  { k.fk(q) } -> std::convertible_to<Vector2>;
  { k.jacobian(q) } -> std::convertible_to<Eigen::Matrix2d>;
  { k.jacobian_dq(q, i) } -> std::convertible_to<Eigen::Matrix2d>;
};

/**
 * Velocity-aware half-plane barrier for the end effector:
 *   h(q, qd) = -n^T J(q) qd + gamma (beta - n^T FK(q)).
 * State is (q1, q2, qd1, qd2).
 */
template <PlanarKinematics K>
BarrierValue hcbf_arm(const Vector& x, double beta, const Vector2& normal, double gamma, const K& kin) {
  const Vector2 q = x.head<2>();
  const Vector2 qd = x.tail<2>();
  const Eigen::Matrix2d jac = kin.jacobian(q);
  const Vector2 jt_n = jac.transpose() * normal;
  BarrierValue out;
  out.value = -normal.dot(jac * qd) + gamma * (beta - normal.dot(kin.fk(q)));
  out.gradient.resize(4);
  for (int i = 0; i < 2; ++i)
    out.gradient[i] = -normal.dot(kin.jacobian_dq(q, i) * qd) - gamma * jt_n[i];
  out.gradient.tail<2>() = -jt_n;
  return out;
}

/// Learned barrier h~ = h^ + residual. A null residual yields the handcrafted
/// barrier unchanged.
class LearnedCbf {
 public:
  using Handcrafted = std::function<BarrierValue(const Vector&)>;

  LearnedCbf(Handcrafted hcbf, const DualNet<double>* residual)
      : hcbf_(std::move(hcbf)), residual_(residual) {}

  BarrierValue operator()(const Vector& x) const {
    if (!x.allFinite()) throw NonFiniteError("barrier evaluated at a non-finite state");
    BarrierValue out = hcbf_(x);
    if (residual_ != nullptr) {
      const auto r = residual_->forward_dual(x);
      out.value += r.value;
      out.gradient += r.input_grad;
    }
    return out;
  }

  BarrierValue handcrafted(const Vector& x) const { return hcbf_(x); }
  const DualNet<double>* residual() const { return residual_; }

 private:
  Handcrafted hcbf_;
  const DualNet<double>* residual_;
};

}  // namespace percbf
