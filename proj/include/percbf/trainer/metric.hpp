#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/environment.hpp"
#include "percbf/safety/qp_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace percbf {

struct TrajectoryPoint {
  int rollout = 0;
  double t = 0.0;
  Vector state;
  Vector control;  // applied from this state; empty at the final state
  double distance = 0.0;
  double barrier = 0.0;
};

struct MetricResult {
  double metric = std::numeric_limits<double>::infinity();
  int degenerate_steps = 0;
  int aborted_rollouts = 0;  // rollouts cut short by a non-finite state
  std::vector<TrajectoryPoint> trajectory;  // filled on request
};

/// Closed-loop control: performance action filtered through the barrier; falls
/// back to the performance action where the constraint is degenerate.
template <Environment E>
Vector filtered_control(const E& env, const Vector& x, const LearnedCbf& cbf, const ClassK& alpha,
                        bool* degenerate = nullptr) {
  const Vector u_perf = env.performance(x);
  try {
    return qp_filter(env, x, u_perf, cbf, alpha);
  } catch (const DegenerateConstraint&) {
    if (degenerate != nullptr) *degenerate = true;
    return u_perf;
  }
}

/**
 * m_e = min over rollouts from `starts` and over t in [0, T] of l(x(t)) under
 * the filtered controller. Deterministic; never touches replay buffers. A
 * rollout whose integration turns non-finite ends there and is counted in
 * aborted_rollouts; its finite prefix still enters the minimum.
 */
template <Environment E>
MetricResult evaluate_metric(const E& env, const LearnedCbf& cbf, const ClassK& alpha,
                             const std::vector<Vector>& starts, int horizon, bool keep_trajectory = false) {
  if (starts.empty()) throw ConfigError("evaluation set must be non-empty");
  MetricResult res;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    Vector x = starts[r];
    for (int k = 0; k <= horizon; ++k) {
      const double ell = boundary_distance(env, x);
      res.metric = std::min(res.metric, ell);
      if (k == horizon) {
        if (keep_trajectory)
          res.trajectory.push_back({static_cast<int>(r), k * env.dt(), x, Vector(), ell, cbf(x).value});
        break;
      }
      bool degenerate = false;
      const Vector u = filtered_control(env, x, cbf, alpha, &degenerate);
      if (degenerate) ++res.degenerate_steps;
      if (keep_trajectory)
        res.trajectory.push_back({static_cast<int>(r), k * env.dt(), x, u, ell, cbf(x).value});
      try {
        x = step(env, x, u).next;
      } catch (const NonFiniteError&) {
        ++res.aborted_rollouts;
        break;
      }
    }
  }
  return res;
}

struct Convergence {
  int epoch = 0;
  bool converged = true;
};

/**
 * First epoch e after which every value stays within tol_fraction * range of
 * the mean of the final window (window_fraction of the series, at least one
 * point). Returns the last epoch with converged = false when no such e exists.
 */
inline Convergence convergence_epoch(const std::vector<double>& series, double window_fraction = 0.1,
                                     double tol_fraction = 0.05) {
  if (series.empty()) throw Error("convergence_epoch: empty series");
  const auto n = static_cast<int>(series.size());
  const int window = std::max(1, static_cast<int>(std::lround(window_fraction * n)));
  const double tail_mean =
      std::accumulate(series.end() - window, series.end(), 0.0) / static_cast<double>(window);
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  const double tol = tol_fraction * (*hi - *lo);
  int first = n;
  for (int e = n - 1; e >= 0; --e) {
    if (std::abs(series[e] - tail_mean) <= tol) first = e;
    else break;
  }
  if (first == n) return {n - 1, false};
  return {first, true};
}

}  // namespace percbf
