#pragma once

// Reference computations used to check the library: finite differences,
// brute-force geometry and a generic KKT solve for the projection QP. None of
// these share code paths with the routines they check.

#include "percbf/common.hpp"
#include "percbf/geometry/gjk_epa.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace percbf::oracle {

/// Central finite-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

/// Relative error |a - b| / max(|a|, |b|, floor), maximised over components.
inline double max_rel_error(const Vector& a, const Vector& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

/**
 * min ||u - u_perf||^2 s.t. a.u + b >= 0 by active-set enumeration: the
 * unconstrained minimiser if feasible, otherwise the KKT system
 *   [2I  -a^T][u  ]   [2 u_perf]
 *   [a    0  ][mu ] = [  -b    ]
 * solved with a dense LU.
 */
inline Vector qp_active_set(const Vector& u_perf, const Eigen::RowVectorXd& a, double b) {
  if (a.dot(u_perf) + b >= 0.0) return u_perf;
  const auto m = u_perf.size();
  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  kkt.topLeftCorner(m, m) = 2.0 * Matrix::Identity(m, m);
  kkt.topRightCorner(m, 1) = -a.transpose();
  kkt.bottomLeftCorner(1, m) = a;
  Vector rhs(m + 1);
  rhs.head(m) = 2.0 * u_perf;
  rhs[m] = -b;
  const Vector sol = kkt.fullPivLu().solve(rhs);
  return sol.head(m);
}

inline double point_segment_distance(const Vector2& p, const Vector2& a, const Vector2& b) {
  const Vector2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

inline bool point_in_polygon(const geometry::ConvexPolygon& poly, const Vector2& p, double slack = 0.0) {
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vector2 e = v[(i + 1) % v.size()] - v[i];
    if (geometry::cross(e, p - v[i]) / e.norm() < slack) return false;
  }
  return true;
}

/// Boundary-to-boundary minimum distance from `samples_per_edge` points per
/// edge of one polygon to the edges of the other, both ways.
inline double brute_distance(const geometry::ConvexPolygon& a, const geometry::ConvexPolygon& b,
                             int samples_per_edge = 200) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const geometry::ConvexPolygon& p, const geometry::ConvexPolygon& q) {
    const auto& pv = p.vertices();
    const auto& qv = q.vertices();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const Vector2 p0 = pv[i], p1 = pv[(i + 1) % pv.size()];
      for (int s = 0; s <= samples_per_edge; ++s) {
        const Vector2 pt = p0 + (p1 - p0) * (static_cast<double>(s) / samples_per_edge);
        for (std::size_t j = 0; j < qv.size(); ++j)
          best = std::min(best, point_segment_distance(pt, qv[j], qv[(j + 1) % qv.size()]));
      }
    }
  };
  scan(a, b);
  scan(b, a);
  return best;
}

inline bool segments_intersect(const Vector2& p0, const Vector2& p1, const Vector2& q0, const Vector2& q1) {
  const double d1 = geometry::cross(q1 - q0, p0 - q0), d2 = geometry::cross(q1 - q0, p1 - q0);
  const double d3 = geometry::cross(p1 - p0, q0 - p0), d4 = geometry::cross(p1 - p0, q1 - p0);
  return ((d1 <= 0 && d2 >= 0) || (d1 >= 0 && d2 <= 0)) && ((d3 <= 0 && d4 >= 0) || (d3 >= 0 && d4 <= 0));
}

/// Convex sets intersect iff some pair of edges meets or one contains the other.
inline bool overlapping(const geometry::ConvexPolygon& a, const geometry::ConvexPolygon& b) {
  const auto& av = a.vertices();
  const auto& bv = b.vertices();
  for (std::size_t i = 0; i < av.size(); ++i)
    for (std::size_t j = 0; j < bv.size(); ++j)
      if (segments_intersect(av[i], av[(i + 1) % av.size()], bv[j], bv[(j + 1) % bv.size()])) return true;
  return point_in_polygon(a, bv[0]) || point_in_polygon(b, av[0]);
}

/// Overlap after projecting onto unit direction u: how far B must move along u
/// to clear A.
inline double overlap_along(const geometry::ConvexPolygon& a, const geometry::ConvexPolygon& b, const Vector2& u) {
  double amax = -std::numeric_limits<double>::infinity();
  double bmin = std::numeric_limits<double>::infinity();
  for (const auto& p : a.vertices()) amax = std::max(amax, p.dot(u));
  for (const auto& p : b.vertices()) bmin = std::min(bmin, p.dot(u));
  return amax - bmin;
}

/// Minimum translation distance by scanning directions on the unit circle.
inline double brute_penetration(const geometry::ConvexPolygon& a, const geometry::ConvexPolygon& b,
                                int directions = 20000) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < directions; ++k) {
    const double th = 2.0 * 3.14159265358979323846 * k / directions;
    best = std::min(best, overlap_along(a, b, Vector2(std::cos(th), std::sin(th))));
  }
  // Edge normals of both polygons contain the exact minimiser.
  auto normals = [&](const geometry::ConvexPolygon& p, double sign) {
    const auto& v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vector2 e = v[(i + 1) % v.size()] - v[i];
      const Vector2 n = sign * Vector2(e.y(), -e.x()).normalized();
      best = std::min(best, overlap_along(a, b, n));
    }
  };
  normals(a, 1.0);
  normals(b, -1.0);
  return std::max(best, 0.0);
}

/// Random convex polygon: 3..8 sorted angles on a circle.
inline geometry::ConvexPolygon random_polygon(Rng& rng, const Vector2& centre, double rmin = 0.3,
                                              double rmax = 1.2) {
  const int n = 3 + static_cast<int>(uniform01(rng) * 6);
  const double radius = uniform(rng, rmin, rmax);
  std::vector<double> ang;
  while (static_cast<int>(ang.size()) < n) {
    const double a = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
    bool ok = true;
    for (double b : ang)
      if (std::abs(a - b) < 0.2) ok = false;
    if (ok) ang.push_back(a);
  }
  std::sort(ang.begin(), ang.end());
  std::vector<Vector2> v;
  for (double a : ang) v.push_back(centre + radius * Vector2(std::cos(a), std::sin(a)));
  return geometry::ConvexPolygon(std::move(v));
}

}  // namespace percbf::oracle
