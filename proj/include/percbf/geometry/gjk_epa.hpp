#pragma once

#include "percbf/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <vector>

namespace percbf::geometry {

inline double cross(const Vector2& a, const Vector2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Counter-clockwise convex polygon.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Vector2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) throw GeometryError("convex polygon needs at least 3 vertices");
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vector2 e0 = vertices_[(i + 1) % n] - vertices_[i];
      const Vector2 e1 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
      if (cross(e0, e1) < -1e-12) throw GeometryError("polygon is not convex and counter-clockwise");
    }
  }

  static ConvexPolygon box(const Vector2& lo, const Vector2& hi) {
    return ConvexPolygon({lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}});
  }

  /// Rectangle of the given width around the segment p0 -> p1.
  static ConvexPolygon segment_rect(const Vector2& p0, const Vector2& p1, double width) {
    const Vector2 dir = (p1 - p0).normalized();
    const Vector2 n(-dir.y() * width / 2, dir.x() * width / 2);
    return ConvexPolygon({p0 - n, p1 - n, p1 + n, p0 + n});
  }

  const std::vector<Vector2>& vertices() const { return vertices_; }

  ConvexPolygon translated(const Vector2& t) const {
    auto v = vertices_;
    for (auto& p : v) p += t;
    return ConvexPolygon(std::move(v));
  }

 private:
  std::vector<Vector2> vertices_;
};

/// Vertex maximising dot(vertex, dir); ties go to the lowest index.
inline const Vector2& support(const ConvexPolygon& poly, const Vector2& dir) {
  if (dir.x() == 0.0 && dir.y() == 0.0) throw GeometryError("support direction must be nonzero");
  const auto& v = poly.vertices();
  std::size_t best = 0;
  double best_dot = v[0].dot(dir);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return v[best];
}

/// Support of the Minkowski difference A - B.
inline Vector2 support(const ConvexPolygon& a, const ConvexPolygon& b, const Vector2& dir) {
  return support(a, dir) - support(b, -dir);
}

struct GjkResult {
  double distance = 0.0;
  bool intersecting = false;
  std::vector<Vector2> simplex;  // final simplex on A - B
  int iterations = 0;
};

inline constexpr double kGjkTolerance = 1e-10;
inline constexpr int kGjkMaxIterations = 64;
inline constexpr double kEpaTolerance = 1e-10;
inline constexpr int kEpaMaxIterations = 128;

namespace detail {

// Closest point to the origin on the simplex; reduces the simplex to the
// smallest feature containing that point. Returns true when a full triangle
// contains the origin.
inline bool reduce_simplex(std::vector<Vector2>& s, Vector2& closest) {
  if (s.size() == 1) {
    closest = s[0];
    return false;
  }
  if (s.size() == 2) {
    const Vector2 a = s[0], b = s[1];
    const Vector2 ab = b - a;
    const double denom = ab.squaredNorm();
    const double t = denom > 0.0 ? std::clamp(-a.dot(ab) / denom, 0.0, 1.0) : 0.0;
    if (t <= 0.0) s = {a};
    else if (t >= 1.0) s = {b};
    closest = a + t * ab;
    return false;
  }
  // Triangle: Voronoi regions, origin as the query point.
  const Vector2 a = s[0], b = s[1], c = s[2];
  const Vector2 ab = b - a, ac = c - a, ap = -a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    s = {a};
    closest = a;
    return false;
  }
  const Vector2 bp = -b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    s = {b};
    closest = b;
    return false;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    s = {a, b};
    closest = a + v * ab;
    return false;
  }
  const Vector2 cp = -c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    s = {c};
    closest = c;
    return false;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    s = {a, c};
    closest = a + w * ac;
    return false;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    s = {b, c};
    closest = b + w * (c - b);
    return false;
  }
  closest = Vector2::Zero();
  return true;
}

}  // namespace detail

/// Euclidean distance between two convex polygons (0 when they intersect).
inline GjkResult gjk(const ConvexPolygon& a, const ConvexPolygon& b) {
  GjkResult res;
  std::vector<Vector2> simplex{support(a, b, Vector2(1.0, 0.0))};
  Vector2 v = simplex[0];
  for (int iter = 0; iter < kGjkMaxIterations; ++iter) {
    res.iterations = iter + 1;
    const double vv = v.squaredNorm();
    if (vv <= kGjkTolerance * kGjkTolerance) {
      res.intersecting = true;
      res.distance = 0.0;
      res.simplex = simplex;
      return res;
    }
    const Vector2 w = support(a, b, -v);
    if (vv - v.dot(w) <= kGjkTolerance * std::max(1.0, vv)) {
      res.distance = std::sqrt(vv);
      res.simplex = simplex;
      return res;
    }
    simplex.push_back(w);
    if (detail::reduce_simplex(simplex, v)) {
      res.intersecting = true;
      res.distance = 0.0;
      res.simplex = simplex;
      return res;
    }
  }
  throw GeometryError("GJK did not converge within 64 iterations");
}

inline double gjk_distance(const ConvexPolygon& a, const ConvexPolygon& b) { return gjk(a, b).distance; }

namespace detail {

// Grows a GJK terminal simplex into a counter-clockwise triangle. Returns false
// when the Minkowski difference is flat around the origin (touching contact).
inline bool seed_triangle(const ConvexPolygon& a, const ConvexPolygon& b, std::vector<Vector2>& s) {
  if (s.size() == 1) {
    const Vector2 dirs[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (const auto& d : dirs) {
      const Vector2 w = support(a, b, d);
      if ((w - s[0]).squaredNorm() > 1e-24) {
        s.push_back(w);
        break;
      }
    }
    if (s.size() == 1) return false;
  }
  if (s.size() == 2) {
    const Vector2 e = s[1] - s[0];
    const Vector2 perp(-e.y(), e.x());
    const Vector2 w1 = support(a, b, perp);
    const Vector2 w2 = support(a, b, -perp);
    const double area1 = std::abs(cross(e, w1 - s[0]));
    const double area2 = std::abs(cross(e, w2 - s[0]));
    const Vector2 w = area1 >= area2 ? w1 : w2;
    if (std::max(area1, area2) <= 1e-14 * std::max(1.0, e.squaredNorm())) return false;
    s.push_back(w);
  }
  if (cross(s[1] - s[0], s[2] - s[0]) < 0.0) std::swap(s[1], s[2]);
  return std::abs(cross(s[1] - s[0], s[2] - s[0])) > 0.0;
}

}  // namespace detail

/// Penetration depth (minimum separating translation) of intersecting polygons.
inline double epa_penetration(const ConvexPolygon& a, const ConvexPolygon& b, const GjkResult& hit) {
  if (!hit.intersecting) throw GeometryError("EPA called on disjoint polygons");
  std::vector<Vector2> poly = hit.simplex;
  if (!detail::seed_triangle(a, b, poly)) return 0.0;
  for (int iter = 0; iter < kEpaMaxIterations; ++iter) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    Vector2 best_normal = Vector2::Zero();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vector2& p = poly[i];
      const Vector2& q = poly[(i + 1) % poly.size()];
      const Vector2 e = q - p;
      const double len = e.norm();
      if (len <= 1e-300) continue;
      const Vector2 n(e.y() / len, -e.x() / len);  // outward for CCW order
      const double d = n.dot(p);
      if (d < best_dist) {
        best_dist = d;
        best = i;
        best_normal = n;
      }
    }
    const Vector2 w = support(a, b, best_normal);
    if (w.dot(best_normal) - best_dist < kEpaTolerance) return std::max(best_dist, 0.0);
    for (const auto& p : poly)
      if ((p - w).squaredNorm() <= kEpaTolerance * kEpaTolerance) return std::max(best_dist, 0.0);
    poly.insert(poly.begin() + static_cast<std::ptrdiff_t>(best + 1), w);
  }
  throw GeometryError("EPA did not converge within 128 iterations");
}

inline double epa_penetration(const ConvexPolygon& a, const ConvexPolygon& b) {
  return epa_penetration(a, b, gjk(a, b));
}

struct SignedDistance {
  double distance = 0.0;
  double penetration = 0.0;
  double signed_value() const { return distance - penetration; }
};

/// Separation distance minus penetration depth.
inline SignedDistance signed_distance(const ConvexPolygon& a, const ConvexPolygon& b) {
  const GjkResult hit = gjk(a, b);
  if (!hit.intersecting) return {hit.distance, 0.0};
  return {0.0, epa_penetration(a, b, hit)};
}

}  // namespace percbf::geometry
