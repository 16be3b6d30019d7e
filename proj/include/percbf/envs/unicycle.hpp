#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/environment.hpp"
#include "percbf/safety/barrier.hpp"

#include <cmath>
#include <vector>

namespace percbf {

struct UnicycleParams {
  double side = 1.0;           // square obstacle side length, centred at the origin
  double hcbf_radius = 1.0;    // circle used by the handcrafted barrier
  double lookahead = 0.5;
  double k_v = 0.75;
  double k_omega = 3.0;
  double dt = 0.01;
  Vector2 target{2.5, 2.5};
  Eigen::Vector3d start{-2.5, -2.5, 0.7853981633974483};
  double start_jitter = 0.1;   // uniform perturbation of the start position
  // Evaluation starts: offsets of the start position along the direction
  // perpendicular to start -> target.
  std::vector<double> eval_offsets{-0.14, -0.10, -0.06, -0.02, 0.02, 0.06, 0.10, 0.14};
};

/// Proportional go-to-goal controller (v, omega) = (K_v e, K_omega (bearing - phi))
/// with the heading error wrapped to (-pi, pi].
inline Vector unicycle_perf(const Vector& x, const Vector2& target, double k_v, double k_omega) {
  const double ex = target.x() - x[0], ey = target.y() - x[1];
  Vector u(2);
  u << k_v * std::hypot(ex, ey), k_omega * wrap_angle(std::atan2(ey, ex) - x[2]);
  return u;
}

/// Unicycle x' = v cos(phi), y' = v sin(phi), phi' = omega around a square
/// obstacle.
class Unicycle {
 public:
  explicit Unicycle(UnicycleParams p = {}) : p_(std::move(p)) {
    if (!(p_.side > 0.0 && p_.hcbf_radius > 0.0 && p_.lookahead > 0.0 && p_.dt > 0.0))
      throw ConfigError("unicycle geometry and time step must be positive");
  }

  const UnicycleParams& params() const { return p_; }
  int state_dim() const { return 3; }
  int control_dim() const { return 2; }
  double dt() const { return p_.dt; }

  Vector drift(const Vector&) const { return Vector::Zero(3); }

  Matrix actuation(const Vector& x) const {
    Matrix g = Matrix::Zero(3, 2);
    g(0, 0) = std::cos(x[2]);
    g(1, 0) = std::sin(x[2]);
    g(2, 1) = 1.0;
    return g;
  }

  /// d(x) = max(|x|, |y|) - s / 2.
  double distance(const Vector& x) const { return std::max(std::abs(x[0]), std::abs(x[1])) - p_.side / 2.0; }

  std::vector<double> constraints(const Vector& x) const { return {distance(x)}; }

  Vector performance(const Vector& x) const { return unicycle_perf(x, p_.target, p_.k_v, p_.k_omega); }

  BarrierValue hcbf(const Vector& x) const { return hcbf_unicycle(x, p_.hcbf_radius, p_.lookahead); }

  Vector initial_state(Rng& rng) const {
    Vector x = p_.start;
    x[0] += uniform(rng, -p_.start_jitter, p_.start_jitter);
    x[1] += uniform(rng, -p_.start_jitter, p_.start_jitter);
    return x;
  }

  std::vector<Vector> evaluation_starts() const {
    const Vector2 dir = (p_.target - p_.start.head<2>()).normalized();
    const Vector2 perp(-dir.y(), dir.x());
    std::vector<Vector> out;
    for (double o : p_.eval_offsets) {
      Vector x = p_.start;
      x.head<2>() += o * perp;
      out.push_back(x);
    }
    return out;
  }

 private:
  UnicycleParams p_;
};

}  // namespace percbf
