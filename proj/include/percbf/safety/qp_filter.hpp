#pragma once

#include "percbf/common.hpp"
#include "percbf/safety/barrier.hpp"

namespace percbf {

/// Affine CBF constraint a . u + b >= 0 at one state.
struct CbfConstraint {
  Eigen::RowVectorXd a;
  double b = 0.0;
};

inline CbfConstraint cbf_constraint(const BarrierValue& h, const Vector& drift, const Matrix& actuation,
                                    const ClassK& alpha) {
  return {h.gradient.transpose() * actuation, h.gradient.dot(drift) + alpha(h.value)};
}

/**
 * Minimiser of ||u - u_perf||^2 subject to a . u + b >= 0 with no input bounds:
 * u_perf itself when feasible, otherwise its projection onto the boundary.
 * Throws DegenerateConstraint when the constraint is violated and ||a|| < 1e-9.
 */
inline Vector qp_filter(const Vector& u_perf, const CbfConstraint& c) {
  if (c.a.size() != u_perf.size()) throw ShapeError("qp_filter: control dimension mismatch");
  const double slack = c.a.dot(u_perf) + c.b;
  if (slack >= 0.0) return u_perf;
  const double norm2 = c.a.squaredNorm();
  if (norm2 < 1e-18)
    throw DegenerateConstraint("CBF condition cannot be met: control has no influence on the barrier");
  return u_perf + (-slack / norm2) * c.a.transpose();
}

template <typename System>
Vector qp_filter(const System& sys, const Vector& x, const Vector& u_perf, const LearnedCbf& cbf,
                 const ClassK& alpha) {
  return qp_filter(u_perf, cbf_constraint(cbf(x), sys.drift(x), sys.actuation(x), alpha));
}

}  // namespace percbf
