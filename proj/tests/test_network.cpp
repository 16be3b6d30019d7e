#include "percbf/network/adam.hpp"
#include "percbf/network/dual_net.hpp"
#include "percbf/trainer/losses.hpp"
#include "percbf/verify/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace percbf;

namespace {

Vector random_vec(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

// Random net with O(1) output layer so every pathway is exercised.
DualNet<double> random_net(std::uint64_t seed, int input_dim, std::vector<int> hidden) {
  return DualNet<double>::init(seed, {input_dim, std::move(hidden)}, 0.5);
}

// Central difference of loss(net) with respect to each parameter.
template <class Loss>
Vector fd_param_grad(DualNet<double> net, Loss loss, double h = 1e-6) {
  Vector g(net.parameter_count());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double p = net.parameters()[i];
    net.parameters()[i] = p + h;
    const double up = loss(net);
    net.parameters()[i] = p - h;
    const double down = loss(net);
    net.parameters()[i] = p;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(DualNet, ZeroWeightsGiveConstant) {
  DualNet<double> net({3, {8}});
  net.biases(1)[0] = 0.7;
  const auto out = net.forward_dual(Vector::Ones(3));
  EXPECT_EQ(out.value, 0.7);
  EXPECT_TRUE(out.input_grad.isZero(0));
}

TEST(DualNet, LinearLayerGradientIsWeights) {
  DualNet<double> net({3, {}});
  net.weights(0) << 0.5, -2.0, 3.0;
  net.biases(0)[0] = 1.0;
  Vector x(3);
  x << 1, 1, 1;
  const auto out = net.forward_dual(x);
  EXPECT_DOUBLE_EQ(out.value, 2.5);
  EXPECT_EQ(out.input_grad, Vector(net.weights(0).transpose()));
}

TEST(DualNet, InputGradientMatchesFiniteDifferences) {
  const auto net = random_net(3, 2, {64, 64});
  Rng rng(4);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = random_vec(rng, 2, -3, 3);
    const Vector fd = oracle::fd_gradient([&](const Vector& z) { return net.value(z); }, x, 1e-5);
    worst = std::max(worst, oracle::max_rel_error(net.forward_dual(x).input_grad, fd));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(DualNet, GradientContinuousOnGrid) {
  const auto net = random_net(5, 2, {16, 16});
  for (double a = -2; a <= 2; a += 0.25)
    for (double b = -2; b <= 2; b += 0.25) {
      Vector x(2);
      x << a, b;
      const Vector fd = oracle::fd_gradient([&](const Vector& z) { return net.value(z); }, x, 1e-5);
      ASSERT_LT(oracle::max_rel_error(net.forward_dual(x).input_grad, fd), 1e-5);
    }
}

TEST(DualNet, ValueLossEqualsBackprop) {
  const auto net = random_net(6, 3, {8, 8});
  Rng rng(7);
  const std::vector<Vector> xs{random_vec(rng, 3)};
  const std::vector<double> dv{1.0};
  const Vector g = net.param_grad(xs, dv, {});
  const Vector fd = fd_param_grad(net, [&](const DualNet<double>& n) { return n.value(xs[0]); });
  EXPECT_LT(oracle::max_rel_error(g, fd), 1e-4);
}

TEST(DualNet, InputGradientLossPathway) {
  const auto net = random_net(8, 3, {8, 8});
  Rng rng(9);
  const std::vector<Vector> xs{random_vec(rng, 3), random_vec(rng, 3)};
  const std::vector<Vector> vs{random_vec(rng, 3), random_vec(rng, 3)};
  const std::vector<double> dv{0.0, 0.0};
  const Vector g = net.param_grad(xs, dv, vs);
  const Vector fd = fd_param_grad(net, [&](const DualNet<double>& n) {
    return vs[0].dot(n.forward_dual(xs[0]).input_grad) + vs[1].dot(n.forward_dual(xs[1]).input_grad);
  });
  EXPECT_LT(oracle::max_rel_error(g, fd), 1e-4);
}

TEST(DualNet, ConstraintHingeGradient) {
  const auto net = random_net(10, 3, {8, 8});
  const ClassK alpha(1.0);
  const auto hcbf = [](const Vector& x) { return hcbf_unicycle(x, 1.0, 0.5); };
  Vector x(3), xd(3);
  x << 0.8, -0.6, 0.4;
  xd << -1.2, 0.9, 2.0;
  const Transition t{x, Vector::Zero(2), xd, 0.3, Label::Safe};
  const auto loss_of = [&](const DualNet<double>& n) {
    const LossBatches b{{}, {}, {&t}};
    return compute_losses(b, LearnedCbf(hcbf, &n), 100.0, alpha, GradLossForm::ConditionViolation).total;
  };
  ASSERT_GT(loss_of(net), 1e-3);
  LossPartials p;
  compute_losses({{}, {}, {&t}}, LearnedCbf(hcbf, &net), 100.0, alpha, GradLossForm::ConditionViolation, &p);
  const Vector g = net.param_grad(p.inputs, p.dvalue, p.dgrad);
  EXPECT_LT(oracle::max_rel_error(g, fd_param_grad(net, loss_of)), 1e-4);
}

TEST(DualNet, ShapeErrors) {
  const auto net = random_net(1, 3, {4});
  const std::vector<Vector> xs{Vector::Zero(3)};
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(net.param_grad(xs, two, {}), ShapeError);
  EXPECT_THROW(net.forward_dual(Vector::Zero(2)), ShapeError);
  Vector bad = Vector::Zero(3);
  bad[1] = std::nan("");
  EXPECT_THROW(net.forward_dual(bad), NonFiniteError);
}

TEST(DualNet, InitIsDeterministic) {
  const auto a = DualNet<double>::init(42, {3, {64, 64}});
  const auto b = DualNet<double>::init(42, {3, {64, 64}});
  const auto c = DualNet<double>::init(43, {3, {64, 64}});
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
}

TEST(DualNet, InitialResidualIsSmallOnWorkspace) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto net = DualNet<double>::init(seed, {3, {64, 64}});
    for (double x = -3; x <= 3; x += 0.5)
      for (double y = -3; y <= 3; y += 0.5)
        for (double phi = -M_PI; phi <= M_PI; phi += 0.5) {
          Vector s(3);
          s << x, y, phi;
          ASSERT_LT(std::abs(net.value(s)), 0.1);
        }
  }
}

TEST(DualNet, SaveLoadIsBitExact) {
  const auto net = random_net(12, 4, {7, 5});
  std::stringstream ss;
  net.save(ss);
  const auto back = DualNet<double>::load(ss);
  EXPECT_EQ(back.layer_shapes(), net.layer_shapes());
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i)
    ASSERT_EQ(back.parameters()[i], net.parameters()[i]);
}

TEST(DualNet, LoadRejectsGarbage) {
  std::stringstream ss("percbf-dualnet 1\n2\n4 3\n2 4\n");
  EXPECT_THROW(DualNet<double>::load(ss), Error);
  std::stringstream junk("hello");
  EXPECT_THROW(DualNet<double>::load(junk), Error);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Adam<double> opt(AdamParams{0.1});
  Vector p(2);
  p << 1, -1;
  const Vector before = p;
  opt.step(p, Vector::Zero(2));
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.step_count(), 1);
}

TEST(Adam, TwoStepsByHand) {
  Adam<double> opt(AdamParams{0.1, 0.9, 0.999, 1e-8});
  Vector p(1), g(1);
  p << 1.0;
  g << 2.0;
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(opt.first_moment()[0], 0.2);
  EXPECT_DOUBLE_EQ(opt.second_moment()[0], 0.004);
  // m_hat = 2, v_hat = 4
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  const double p1 = p[0];
  g << -1.0;
  opt.step(p, g);
  const double m = 0.9 * 0.2 + 0.1 * -1.0;
  const double v = 0.999 * 0.004 + 0.001 * 1.0;
  EXPECT_DOUBLE_EQ(opt.first_moment()[0], m);
  EXPECT_NEAR(opt.second_moment()[0], v, 1e-17);
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], p1 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
  EXPECT_EQ(opt.step_count(), 2);
}

TEST(Adam, ConstantGradientStepTendsToLearningRate) {
  Adam<double> opt(AdamParams{1e-3});
  Vector p = Vector::Zero(1), g = Vector::Constant(1, 0.37);
  double last = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const double before = p[0];
    opt.step(p, g);
    last = before - p[0];
  }
  EXPECT_NEAR(last, 1e-3, 1e-9);
}

TEST(Adam, ShapeMismatch) {
  Adam<double> opt;
  Vector p = Vector::Zero(2);
  EXPECT_THROW(opt.step(p, Vector::Zero(3)), ShapeError);
  EXPECT_THROW(Adam<double>(AdamParams{-1.0}), ConfigError);
}

TEST(Adam, DeterministicTraining) {
  auto run = [] {
    auto net = DualNet<double>::init(3, {2, {16}});
    Adam<double> opt(AdamParams{1e-2});
    Rng rng(8);
    for (int k = 0; k < 50; ++k) {
      const std::vector<Vector> xs{random_vec(rng, 2), random_vec(rng, 2)};
      const std::vector<double> dv{1.0, -0.5};
      opt.step(net.parameters(), net.param_grad(xs, dv, {}));
    }
    return net.parameters();
  };
  EXPECT_EQ(run(), run());
}
