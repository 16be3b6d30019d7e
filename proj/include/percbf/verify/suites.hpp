#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/environment.hpp"
#include "percbf/envs/unicycle.hpp"
#include "percbf/geometry/gjk_epa.hpp"
#include "percbf/network/dual_net.hpp"
#include "percbf/replay/per_buffer.hpp"
#include "percbf/safety/barrier.hpp"
#include "percbf/safety/qp_filter.hpp"
#include "percbf/trainer/losses.hpp"
#include "percbf/trainer/theorems.hpp"
#include "percbf/verify/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace percbf::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

template <typename F>
CheckResult timed(std::string name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{std::move(name), false, {}, 0.0};
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

inline Vector random_vector(Rng& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

}  // namespace detail

/// Prioritized-L1 vs uniform-L2 gradient identity on 20 random networks with
/// 32-sample synthetic buffers, exact expectations; tolerance 1e-10.
inline CheckResult check_theorem1(std::uint64_t seed = 1) {
  return detail::timed("theorem1", [&](CheckResult& r) {
    Rng rng(seed);
    double worst = 0.0;
    for (int net_i = 0; net_i < 20; ++net_i) {
      const auto net = DualNet<double>::init(rng(), {3, {16, 16}}, 1.0);
      std::vector<Vector> xs;
      std::vector<double> ys;
      for (int i = 0; i < 32; ++i) {
        xs.push_back(detail::random_vector(rng, 3, -2, 2));
        double y = uniform(rng, -2, 2);
        if (std::abs(net.value(xs.back()) - y) < 1e-3) y += 0.5;
        ys.push_back(y);
      }
      worst = std::max(worst, theorem1_check(net, xs, ys).max_error);
    }
    r.passed = worst < 1e-10;
    r.detail = "max identity error " + detail::fmt(worst) + " (< 1e-10)";
  });
}

/// L2-before-L1 first passage for delta0 in {1.5, 2, 5}; reverse ordering at a
/// small target for delta0 = 0.5.
inline CheckResult check_theorem2(double eta = 0.01) {
  return detail::timed("theorem2", [&](CheckResult& r) {
    std::ostringstream os;
    bool ok = true;
    for (double d0 : {1.5, 2.0, 5.0}) {
      const OrderingScan s = theorem2_scan(eta, d0);
      ok = ok && s.exists;
      os << "d0=" << d0 << ": eps=" << s.target << " t_L2=" << (s.times.l2 ? *s.times.l2 : -1)
         << " t_L1=" << (s.times.l1 ? *s.times.l1 : -1) << "; ";
    }
    const PassageTimes small = theorem2_check(eta, 0.5, 0.05);
    const bool reverse = small.l1 && small.l2 && *small.l1 < *small.l2;
    ok = ok && reverse;
    os << "d0=0.5 eps=0.05: t_L1=" << (small.l1 ? *small.l1 : -1) << " < t_L2=" << (small.l2 ? *small.l2 : -1);
    r.passed = ok;
    r.detail = os.str();
  });
}

/// Input gradient and parameter gradients of the three loss forms against
/// central finite differences; relative tolerance 1e-4.
inline CheckResult check_gradients(std::uint64_t seed = 2) {
  return detail::timed("gradcheck", [&](CheckResult& r) {
    Rng rng(seed);
    // input gradient: 2-64-64-1 network at 100 points, step 1e-5
    const auto net2 = DualNet<double>::init(rng(), {2, {64, 64}}, 1.0);
    double input_err = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vector x = detail::random_vector(rng, 2, -2, 2);
      const Vector fd = oracle::fd_gradient([&](const Vector& p) { return net2.value(p); }, x, 1e-5);
      input_err = std::max(input_err, oracle::max_rel_error(net2.forward_dual(x).input_grad, fd));
    }

    // parameter gradients on a small 3-input net with the unicycle barrier
    auto net = DualNet<double>::init(rng(), {3, {12, 12}}, 1.0);
    const Unicycle uni;
    const ClassK alpha(1.0);
    const LearnedCbf cbf([&](const Vector& x) { return uni.hcbf(x); }, &net);

    const Vector x_v = detail::random_vector(rng, 3, -1, 1);
    const Vector dir = detail::random_vector(rng, 3, -1, 1);
    // pick a state/derivative pair where the constraint hinge is strictly active
    Transition tr;
    for (;;) {
      tr.state = detail::random_vector(rng, 3, -2, 2);
      tr.state_derivative = detail::random_vector(rng, 3, -2, 2);
      if (grad_hinge_argument(cbf(tr.state), tr.state_derivative, alpha, GradLossForm::ConditionViolation) > 0.1)
        break;
    }
    auto hinge_loss = [&]() {
      LossBatches b;
      b.grad.push_back(&tr);
      return compute_losses(b, cbf, 100.0, alpha, GradLossForm::ConditionViolation).total;
    };

    const auto& params = net.parameters();
    const std::size_t count = net.parameter_count();
    std::vector<std::size_t> picks;
    for (int k = 0; k < 100; ++k) picks.push_back(static_cast<std::size_t>(uniform01(rng) * count));

    // analytic gradients
    const std::vector<Vector> xv{x_v};
    const double one = 1.0;
    const Vector g_value = net.param_grad(xv, std::span<const double>(&one, 1), {});
    const double zero = 0.0;
    const std::vector<Vector> dv{dir};
    const Vector g_dot = net.param_grad(xv, std::span<const double>(&zero, 1), dv);
    LossBatches hb;
    hb.grad.push_back(&tr);
    LossPartials part;
    compute_losses(hb, cbf, 100.0, alpha, GradLossForm::ConditionViolation, &part);
    const Vector g_hinge = net.param_grad(part.inputs, part.dvalue, part.dgrad);

    auto fd_param = [&](std::size_t i, const std::function<double()>& f) {
      const double h = 1e-6;
      const double orig = params[static_cast<Eigen::Index>(i)];
      net.parameters()[static_cast<Eigen::Index>(i)] = orig + h;
      const double fp = f();
      net.parameters()[static_cast<Eigen::Index>(i)] = orig - h;
      const double fm = f();
      net.parameters()[static_cast<Eigen::Index>(i)] = orig;
      return (fp - fm) / (2 * h);
    };
    auto compare = [&](const Vector& analytic, const std::function<double()>& f) {
      Vector a(static_cast<Eigen::Index>(picks.size())), n(static_cast<Eigen::Index>(picks.size()));
      for (std::size_t k = 0; k < picks.size(); ++k) {
        a[static_cast<Eigen::Index>(k)] = analytic[static_cast<Eigen::Index>(picks[k])];
        n[static_cast<Eigen::Index>(k)] = fd_param(picks[k], f);
      }
      return oracle::max_rel_error(a, n);
    };
    const double e_value = compare(g_value, [&] { return net.value(x_v); });
    const double e_dot = compare(g_dot, [&] { return dir.dot(net.forward_dual(x_v).input_grad); });
    const double e_hinge = compare(g_hinge, hinge_loss);

    const double worst_param = std::max({e_value, e_dot, e_hinge});
    r.passed = input_err < 1e-4 && worst_param < 1e-4;
    r.detail = "input grad " + detail::fmt(input_err) + ", value " + detail::fmt(e_value) + ", v.grad " +
               detail::fmt(e_dot) + ", hinge " + detail::fmt(e_hinge) + " (< 1e-4)";
  });
}

/// Closed-form filter vs active-set KKT oracle on 1000 random instances
/// (1e-8), and bitwise pass-through of feasible controls.
inline CheckResult check_qp(std::uint64_t seed = 3) {
  return detail::timed("qp", [&](CheckResult& r) {
    Rng rng(seed);
    double worst = 0.0, worst_feas = 0.0;
    bool bitwise = true;
    for (int k = 0; k < 1000; ++k) {
      const int m = 1 + static_cast<int>(uniform01(rng) * 3);
      CbfConstraint c{detail::random_vector(rng, m, -2, 2).transpose(), uniform(rng, -3, 3)};
      if (c.a.norm() < 1e-3) continue;
      const Vector u = detail::random_vector(rng, m, -3, 3);
      const Vector got = qp_filter(u, c);
      const Vector ref = oracle::qp_active_set(u, c.a, c.b);
      worst = std::max(worst, (got - ref).norm());
      worst_feas = std::min(worst_feas, c.a.dot(got) + c.b);
      if (c.a.dot(u) + c.b >= 0.0) bitwise = bitwise && (got.array() == u.array()).all();
    }
    r.passed = worst < 1e-8 && bitwise && worst_feas >= -1e-9;
    r.detail = "max |u - u_oracle| " + detail::fmt(worst) + " (< 1e-8), feasible pass-through " +
               (bitwise ? "bitwise" : "NOT bitwise");
  });
}

/// Sum-tree invariants: parent sums after 1e4 random operations, sampling
/// frequencies within 3 sigma over 1e5 draws, node-touch bound.
inline CheckResult check_sum_tree(std::uint64_t seed = 4) {
  return detail::timed("sumtree", [&](CheckResult& r) {
    Rng rng(seed);
    const std::size_t cap = 1000;
    PerBuffer<int> buf({cap, 0.7, 1e-6, 1.0});
    const std::size_t bound = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(cap)))) + 1;
    std::size_t max_touch = 0;
    for (int op = 0; op < 10000; ++op) {
      if (buf.empty() || uniform01(rng) < 0.5) {
        buf.push(op);
      } else {
        const std::size_t i = static_cast<std::size_t>(uniform01(rng) * buf.size());
        const double p = uniform(rng, 0.0, 5.0);
        buf.update_priorities(std::span<const std::size_t>(&i, 1), std::span<const double>(&p, 1));
      }
      max_touch = std::max(max_touch, buf.tree().last_touch_count());
    }
    double leaf_sum = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) leaf_sum += buf.tree().leaf(i);
    const double parent_err = buf.tree().max_parent_sum_error();
    const double root_err = std::abs(buf.tree().total() - leaf_sum);

    PerBuffer<int> fixed({4, 1.0, 1e-6, 1.0});
    for (int i = 0; i < 4; ++i) fixed.push(i);
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    const std::vector<double> pri{1, 2, 3, 4};
    fixed.update_priorities(idx, pri);
    const int draws = 100000;
    std::vector<int> counts(4, 0);
    for (const auto& s : fixed.sample(draws, rng)) ++counts[s.index];
    double worst_sigma = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double p = (i + 1) / 10.0;
      const double sigma = std::sqrt(draws * p * (1 - p));
      worst_sigma = std::max(worst_sigma, std::abs(counts[i] - draws * p) / sigma);
    }
    r.passed = parent_err <= 1e-9 && root_err <= 1e-9 && worst_sigma <= 3.0 && max_touch <= bound;
    r.detail = "parent err " + detail::fmt(parent_err) + ", root err " + detail::fmt(root_err) +
               ", max |z| " + detail::fmt(worst_sigma) + " (<= 3), touches " + std::to_string(max_touch) +
               " (<= " + std::to_string(bound) + ")";
  });
}

/// GJK/EPA vs brute force on 500 separated and 200 overlapping random pairs
/// (1e-3); symmetry and translation invariance (1e-9).
inline CheckResult check_geometry(std::uint64_t seed = 5) {
  return detail::timed("geometry", [&](CheckResult& r) {
    Rng rng(seed);
    double sep_err = 0.0, pen_err = 0.0, sym_err = 0.0, trans_err = 0.0;
    int separated = 0, overlapping = 0;
    while (separated < 500 || overlapping < 200) {
      const auto a = oracle::random_polygon(rng, detail::random_vector(rng, 2, -1, 1));
      const auto b = oracle::random_polygon(rng, detail::random_vector(rng, 2, -2.5, 2.5));
      const auto sd = geometry::signed_distance(a, b);
      const double brute = oracle::brute_distance(a, b);
      const bool overlap = oracle::overlapping(a, b);
      if (!overlap && separated < 500) {
        sep_err = std::max(sep_err, std::abs(sd.signed_value() - brute));
        ++separated;
      } else if (overlap && overlapping < 200) {
        pen_err = std::max(pen_err, std::abs(sd.penetration - oracle::brute_penetration(a, b)));
        ++overlapping;
      } else {
        continue;
      }
      sym_err = std::max(sym_err, std::abs(sd.signed_value() - geometry::signed_distance(b, a).signed_value()));
      const Vector2 t = detail::random_vector(rng, 2, -3, 3);
      trans_err = std::max(trans_err, std::abs(sd.signed_value() -
                                               geometry::signed_distance(a.translated(t), b.translated(t)).signed_value()));
    }
    r.passed = sep_err < 1e-3 && pen_err < 1e-3 && sym_err < 1e-9 && trans_err < 1e-9;
    r.detail = "GJK err " + detail::fmt(sep_err) + ", EPA err " + detail::fmt(pen_err) + " (< 1e-3), symmetry " +
               detail::fmt(sym_err) + ", translation " + detail::fmt(trans_err) + " (< 1e-9)";
  });
}

/// Unicycle under the exact handcrafted barrier filter from 100 safe starts for
/// 1000 steps keeps h^ >= -1e-3.
inline CheckResult check_forward_invariance(std::uint64_t seed = 6) {
  return detail::timed("invariance", [&](CheckResult& r) {
    Rng rng(seed);
    const Unicycle uni;
    const LearnedCbf cbf([&](const Vector& x) { return uni.hcbf(x); }, nullptr);
    const ClassK alpha(1.0);
    double worst = std::numeric_limits<double>::infinity();
    int starts = 0;
    while (starts < 100) {
      Vector x(3);
      x << uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3.14159, 3.14159);
      if (uni.hcbf(x).value < 0.0) continue;
      ++starts;
      for (int k = 0; k < 1000; ++k) {
        const Vector u = qp_filter(uni, x, uni.performance(x), cbf, alpha);
        x = step(uni, x, u).next;
        worst = std::min(worst, uni.hcbf(x).value);
      }
    }
    r.passed = worst >= -1e-3;
    r.detail = "min h^ along 100 rollouts " + detail::fmt(worst) + " (>= -1e-3)";
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"theorem1", "theorem2", "gradcheck", "qp",
                                              "sumtree",  "geometry", "invariance"};
  return names;
}

inline CheckResult run_suite(const std::string& name) {
  if (name == "theorem1") return check_theorem1();
  if (name == "theorem2") return check_theorem2();
  if (name == "gradcheck") return check_gradients();
  if (name == "qp") return check_qp();
  if (name == "sumtree") return check_sum_tree();
  if (name == "geometry") return check_geometry();
  if (name == "invariance") return check_forward_invariance();
  throw ConfigError("unknown verify suite '" + name + "'");
}

}  // namespace percbf::verify
