#pragma once

#include "percbf/common.hpp"
#include "percbf/safety/barrier.hpp"

#include <algorithm>
#include <concepts>
#include <vector>

namespace percbf {

/// A control-affine system x' = f(x) + g(x) u with constraints, a signed
/// distance to the unsafe set, a performance controller and a handcrafted
/// barrier.
template <typename E>
concept Environment = requires(const E& e, const Vector& x, const Vector& u, Rng& rng) {
  { e.state_dim() } -> std::convertible_to<int>;
  { e.control_dim() } -> std::convertible_to<int>;
  { e.dt() } -> std::convertible_to<double>;
  { e.drift(x) } -> std::convertible_to<Vector>;
  { e.actuation(x) } -> std::convertible_to<Matrix>;
  { e.constraints(x) } -> std::convertible_to<std::vector<double>>;
  { e.distance(x) } -> std::convertible_to<double>;
  { e.performance(x) } -> std::convertible_to<Vector>;
  { e.hcbf(x) } -> std::convertible_to<BarrierValue>;
  { e.initial_state(rng) } -> std::convertible_to<Vector>;
  { e.evaluation_starts() } -> std::convertible_to<std::vector<Vector>>;
};

template <Environment E>
Vector dynamics(const E& env, const Vector& x, const Vector& u) {
  return env.drift(x) + env.actuation(x) * u;
}

/// l(x) = min_i c_i(x).
template <Environment E>
double boundary_distance(const E& env, const Vector& x) {
  const auto c = env.constraints(x);
  return *std::min_element(c.begin(), c.end());
}

struct StepResult {
  Vector next;
  Vector applied_derivative;  // f(x) + g(x) u at the pre-step state
};

/// One RK4 step of length dt with the control held constant.
template <Environment E>
StepResult rk4_step(const E& env, const Vector& x, const Vector& u, double dt) {
  if (!x.allFinite() || !u.allFinite()) throw NonFiniteError("non-finite state or control before step");
  const Vector k1 = dynamics(env, x, u);
  const Vector k2 = dynamics(env, Vector(x + 0.5 * dt * k1), u);
  const Vector k3 = dynamics(env, Vector(x + 0.5 * dt * k2), u);
  const Vector k4 = dynamics(env, Vector(x + dt * k3), u);
  StepResult r{x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1};
  if (!r.next.allFinite()) throw NonFiniteError("integration produced a non-finite state");
  return r;
}

template <Environment E>
StepResult step(const E& env, const Vector& x, const Vector& u) {
  return rk4_step(env, x, u, env.dt());
}

}  // namespace percbf
