#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/environment.hpp"
#include "percbf/geometry/gjk_epa.hpp"
#include "percbf/safety/barrier.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace percbf {

using Matrix2 = Eigen::Matrix2d;

/// Forward kinematics of a planar two-link chain rooted at the origin.
struct TwoLinkKinematics {
  double l1 = 1.0;
  double l2 = 1.0;

  Vector2 elbow(const Vector2& q) const { return {l1 * std::cos(q[0]), l1 * std::sin(q[0])}; }

  Vector2 fk(const Vector2& q) const {
    const double q12 = q[0] + q[1];
    return elbow(q) + Vector2(l2 * std::cos(q12), l2 * std::sin(q12));
  }

  Matrix2 jacobian(const Vector2& q) const {
    const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
    const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
    Matrix2 j;
    j << -l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12;
    return j;
  }

  /// dJ/dq_i.
  Matrix2 jacobian_dq(const Vector2& q, int i) const {
    const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
    const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
    Matrix2 d;
    if (i == 0)
      d << -l1 * c1 - l2 * c12, -l2 * c12, -l1 * s1 - l2 * s12, -l2 * s12;
    else
      d << -l2 * c12, -l2 * c12, -l2 * s12, -l2 * s12;
    return d;
  }
};

struct ArmParams {
  double l1 = 1.0, l2 = 1.0;
  double m1 = 1.0, m2 = 1.0;   // uniform thin rods
  double gravity = 9.81;       // along -y in the arm plane
  double dt = 0.01;
  // task-space PD with gravity compensation
  double k_p = 40.0;
  double k_d = 8.0;
  Vector2 target{0.6, 1.85};
  Vector2 start_q{0.0, 1.5707963267948966};
  double start_jitter = 0.1;   // uniform perturbation of the start joint angles (rad)
  // evaluation starts: the 3 x 3 grid of offsets {-0.1, 0, 0.1} around start_q, centre excluded
  std::vector<Vector2> eval_q{{-0.1, 1.4707963267948966}, {-0.1, 1.5707963267948966}, {-0.1, 1.6707963267948966},
                              {0.0, 1.4707963267948966},  {0.0, 1.6707963267948966},  {0.1, 1.4707963267948966},
                              {0.1, 1.5707963267948966},  {0.1, 1.6707963267948966}};
  // handcrafted barrier: n^T p_ee <= beta
  double beta = 1.5;
  Vector2 normal{0.0, 1.0};
  double hcbf_gamma = 1.0;
  // collision geometry
  double wall_y = 1.75;
  double link_width = 0.1;
};

/**
 * Two-link arm M(q) qdd + C(q, qd) qd + G(q) = tau below a wall at y = wall_y.
 * State is (q1, q2, qd1, qd2); control is the joint torque.
 */
class TwoLinkArm {
 public:
  explicit TwoLinkArm(ArmParams p = {}) : p_(std::move(p)), kin_{p_.l1, p_.l2} {
    if (!(p_.l1 > 0 && p_.l2 > 0 && p_.m1 > 0 && p_.m2 > 0 && p_.dt > 0 && p_.link_width > 0))
      throw ConfigError("arm lengths, masses, link width and time step must be positive");
    if (!(p_.hcbf_gamma > 0)) throw ConfigError("arm barrier gamma must be positive");
    check_reachable(p_.target);
  }

  const ArmParams& params() const { return p_; }
  const TwoLinkKinematics& kinematics() const { return kin_; }
  int state_dim() const { return 4; }
  int control_dim() const { return 2; }
  double dt() const { return p_.dt; }

  void check_reachable(const Vector2& target) const {
    const double r = target.norm();
    if (!(r < p_.l1 + p_.l2 && r > std::abs(p_.l1 - p_.l2)))
      throw ConfigError("arm target is not reachable");
  }

  Matrix2 mass_matrix(const Vector2& q) const {
    const double lc2 = p_.l2 / 2, lc1 = p_.l1 / 2;
    const double i1 = p_.m1 * p_.l1 * p_.l1 / 12, i2 = p_.m2 * p_.l2 * p_.l2 / 12;
    const double c2 = std::cos(q[1]);
    const double m22 = p_.m2 * lc2 * lc2 + i2;
    const double m12 = m22 + p_.m2 * p_.l1 * lc2 * c2;
    const double m11 = p_.m1 * lc1 * lc1 + i1 + p_.m2 * (p_.l1 * p_.l1 + lc2 * lc2 + 2 * p_.l1 * lc2 * c2) + i2;
    Matrix2 m;
    m << m11, m12, m12, m22;
    return m;
  }

  /// Coriolis matrix with M' - 2C skew-symmetric.
  Matrix2 coriolis_matrix(const Vector2& q, const Vector2& qd) const {
    const double h = -p_.m2 * p_.l1 * (p_.l2 / 2) * std::sin(q[1]);
    Matrix2 c;
    c << h * qd[1], h * (qd[0] + qd[1]), -h * qd[0], 0.0;
    return c;
  }

  Vector2 coriolis(const Vector2& q, const Vector2& qd) const { return coriolis_matrix(q, qd) * qd; }

  Vector2 gravity_torque(const Vector2& q) const {
    const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
    const double g = p_.gravity;
    return {(p_.m1 * p_.l1 / 2 + p_.m2 * p_.l1) * g * c1 + p_.m2 * (p_.l2 / 2) * g * c12,
            p_.m2 * (p_.l2 / 2) * g * c12};
  }

  /// qdd = M^-1 (tau - C qd - G).
  Vector2 acceleration(const Vector2& q, const Vector2& qd, const Vector2& tau) const {
    return mass_matrix(q).ldlt().solve(tau - coriolis(q, qd) - gravity_torque(q));
  }

  double kinetic_energy(const Vector2& q, const Vector2& qd) const { return 0.5 * qd.dot(mass_matrix(q) * qd); }

  Vector drift(const Vector& x) const {
    const Vector2 q = x.head<2>(), qd = x.tail<2>();
    Vector f(4);
    f.head<2>() = qd;
    f.tail<2>() = acceleration(q, qd, Vector2::Zero());
    return f;
  }

  Matrix actuation(const Vector& x) const {
    Matrix g = Matrix::Zero(4, 2);
    g.bottomRows<2>() = mass_matrix(x.head<2>()).inverse();
    return g;
  }

  Vector2 end_effector(const Vector& x) const { return kin_.fk(x.head<2>()); }

  /// Task-space PD toward `target` with gravity compensation.
  Vector performance_to(const Vector& x, const Vector2& target, double k_p, double k_d) const {
    const Vector2 q = x.head<2>(), qd = x.tail<2>();
    const Matrix2 j = kin_.jacobian(q);
    const Vector2 force = k_p * (target - kin_.fk(q)) - k_d * (j * qd);
    return j.transpose() * force + gravity_torque(q);
  }

  Vector performance(const Vector& x) const { return performance_to(x, p_.target, p_.k_p, p_.k_d); }

  BarrierValue hcbf(const Vector& x) const { return hcbf_arm(x, p_.beta, p_.normal, p_.hcbf_gamma, kin_); }

  std::vector<geometry::ConvexPolygon> link_polygons(const Vector2& q) const {
    const Vector2 elbow = kin_.elbow(q);
    return {geometry::ConvexPolygon::segment_rect(Vector2::Zero(), elbow, p_.link_width),
            geometry::ConvexPolygon::segment_rect(elbow, kin_.fk(q), p_.link_width)};
  }

  geometry::ConvexPolygon wall() const {
    return geometry::ConvexPolygon::box({-10.0, p_.wall_y}, {10.0, p_.wall_y + 10.0});
  }

  /// Minimum signed distance of both links to the wall.
  double distance(const Vector& x) const {
    const auto links = link_polygons(x.head<2>());
    const auto w = wall();
    double d = std::numeric_limits<double>::infinity();
    for (const auto& link : links) d = std::min(d, geometry::signed_distance(link, w).signed_value());
    return d;
  }

  std::vector<double> constraints(const Vector& x) const { return {distance(x)}; }

  Vector initial_state(Rng& rng) const {
    Vector x = Vector::Zero(4);
    x[0] = p_.start_q[0] + uniform(rng, -p_.start_jitter, p_.start_jitter);
    x[1] = p_.start_q[1] + uniform(rng, -p_.start_jitter, p_.start_jitter);
    return x;
  }

  std::vector<Vector> evaluation_starts() const {
    std::vector<Vector> out;
    for (const auto& q : p_.eval_q) {
      Vector x = Vector::Zero(4);
      x.head<2>() = q;
      out.push_back(x);
    }
    return out;
  }

 private:
  ArmParams p_;
  TwoLinkKinematics kin_;
};

}  // namespace percbf
