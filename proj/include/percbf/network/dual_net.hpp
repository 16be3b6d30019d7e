#pragma once

#include "percbf/common.hpp"

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace percbf {

struct Architecture {
  int input_dim = 0;
  std::vector<int> hidden{64, 64};
};

/// Value and analytic input gradient of the network output.
template <typename Scalar>
struct DualOutput {
  Scalar value;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> input_grad;
};

/**
 * Deep differential network: a tanh MLP with a scalar linear output that
 * returns both its value and its exact input gradient, and can back-propagate
 * through that gradient computation for losses depending on either output.
 *
 * Parameters live in one flat vector. Per layer: weights in row-major order
 * (rows = fan-out), then biases. The last layer has a single row.
 */
template <typename Scalar = double>
class DualNet {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMajorMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<RowMajorMat>;
  using ConstMatMap = Eigen::Map<const RowMajorMat>;

  DualNet() = default;

  /// Zero-parameter network with the given layer widths.
  explicit DualNet(const Architecture& arch) {
    if (arch.input_dim <= 0) throw ConfigError("network input dimension must be positive");
    std::vector<int> widths{arch.input_dim};
    for (int h : arch.hidden) {
      if (h <= 0) throw ConfigError("hidden layer widths must be positive");
      widths.push_back(h);
    }
    widths.push_back(1);
    std::size_t offset = 0;
    for (std::size_t k = 1; k < widths.size(); ++k) {
      LayerShape s{widths[k], widths[k - 1], offset, 0};
      s.bias_offset = offset + static_cast<std::size_t>(s.rows) * s.cols;
      offset = s.bias_offset + s.rows;
      shapes_.push_back(s);
    }
    params_ = Vec::Zero(static_cast<Eigen::Index>(offset));
  }

  /// Hidden layers get Glorot-uniform weights and zero biases; the output layer
  /// is uniform in [-output_scale, output_scale] so the initial residual is
  /// near zero.
  static DualNet init(std::uint64_t seed, const Architecture& arch, double output_scale = 1e-2) {
    DualNet net(arch);
    Rng rng(seed);
    for (std::size_t k = 0; k < net.shapes_.size(); ++k) {
      const auto& s = net.shapes_[k];
      const bool output = k + 1 == net.shapes_.size();
      const double limit = output ? output_scale : std::sqrt(6.0 / (s.rows + s.cols));
      for (int i = 0; i < s.rows * s.cols; ++i)
        net.params_[s.weight_offset + i] = static_cast<Scalar>(uniform(rng, -limit, limit));
      for (int i = 0; i < s.rows; ++i)
        net.params_[s.bias_offset + i] =
            output ? static_cast<Scalar>(uniform(rng, -limit, limit)) : Scalar{0};
    }
    return net;
  }

  int input_dim() const { return shapes_.empty() ? 0 : shapes_.front().cols; }
  std::size_t layer_count() const { return shapes_.size(); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  std::vector<std::pair<int, int>> layer_shapes() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& s : shapes_) out.emplace_back(s.rows, s.cols);
    return out;
  }

  const Vec& parameters() const { return params_; }
  Vec& parameters() { return params_; }

  ConstMatMap weights(std::size_t k) const {
    const auto& s = shapes_.at(k);
    return ConstMatMap(params_.data() + s.weight_offset, s.rows, s.cols);
  }
  MatMap weights(std::size_t k) {
    const auto& s = shapes_.at(k);
    return MatMap(params_.data() + s.weight_offset, s.rows, s.cols);
  }
  Eigen::Map<const Vec> biases(std::size_t k) const {
    const auto& s = shapes_.at(k);
    return Eigen::Map<const Vec>(params_.data() + s.bias_offset, s.rows);
  }
  Eigen::Map<Vec> biases(std::size_t k) {
    const auto& s = shapes_.at(k);
    return Eigen::Map<Vec>(params_.data() + s.bias_offset, s.rows);
  }

  Scalar value(const Vec& x) const { return forward_dual(x).value; }

  DualOutput<Scalar> forward_dual(const Vec& x) const {
    Tape tape;
    run(x, tape);
    return {tape.value, tape.s.front()};
  }

  /**
   * Accumulates d(loss)/d(params) for a loss whose per-sample partials are
   * dvalue[i] = dL/dy(x_i) and dgrad[i] = dL/d(dy/dx)(x_i). The second vector
   * may be empty when no sample's loss depends on the input gradient.
   */
  Vec param_grad(std::span<const Vec> xs, std::span<const Scalar> dvalue,
                 std::span<const Vec> dgrad) const {
    if (dvalue.size() != xs.size() || (!dgrad.empty() && dgrad.size() != xs.size()))
      throw ShapeError("param_grad: per-sample partials do not match the batch");
    Vec grad = Vec::Zero(params_.size());
    Tape tape;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!dgrad.empty() && dgrad[i].size() != input_dim())
        throw ShapeError("param_grad: input-gradient partial has wrong dimension");
      run(xs[i], tape);
      accumulate(tape, dvalue[i], dgrad.empty() ? nullptr : &dgrad[i], grad);
    }
    return grad;
  }

  void save(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "percbf-dualnet 1\n" << shapes_.size() << '\n';
    for (const auto& s : shapes_) os << s.rows << ' ' << s.cols << '\n';
    for (Eigen::Index i = 0; i < params_.size(); ++i) os << params_[i] << '\n';
    os.precision(old_precision);
  }

  static DualNet load(std::istream& is) {
    std::string magic;
    int version = 0;
    std::size_t layers = 0;
    if (!(is >> magic >> version) || magic != "percbf-dualnet" || version != 1)
      throw Error("not a percbf-dualnet version 1 checkpoint");
    if (!(is >> layers) || layers < 1) throw Error("checkpoint: bad layer count");
    Architecture arch;
    arch.hidden.clear();
    int prev = 0;
    for (std::size_t k = 0; k < layers; ++k) {
      int rows = 0, cols = 0;
      if (!(is >> rows >> cols) || rows <= 0 || cols <= 0) throw Error("checkpoint: bad layer shape");
      if (k == 0) arch.input_dim = cols;
      else if (cols != prev) throw Error("checkpoint: layer shapes do not chain");
      if (k + 1 < layers) arch.hidden.push_back(rows);
      else if (rows != 1) throw Error("checkpoint: output layer must have one row");
      prev = rows;
    }
    DualNet net(arch);
    for (Eigen::Index i = 0; i < net.params_.size(); ++i) {
      double v = 0.0;
      if (!(is >> v)) throw Error("checkpoint: truncated parameter list");
      net.params_[i] = static_cast<Scalar>(v);
    }
    return net;
  }

 private:
  struct LayerShape {
    int rows;
    int cols;
    std::size_t weight_offset;
    std::size_t bias_offset;
  };

  // a[k]: layer activations (a[0] = x), dsig[k]: tanh'(z_k) for hidden layer k,
  // s[k]: dy/da_k, t[k]: dy/dz_k. Hidden layers are indexed 1..H.
  struct Tape {
    std::vector<Vec> a, dsig, s, t;
    Scalar value{};
  };

  void run(const Vec& x, Tape& tape) const {
    if (x.size() != input_dim()) throw ShapeError("network input has wrong dimension");
    if (!x.allFinite()) throw NonFiniteError("network input is not finite");
    const std::size_t hidden = shapes_.size() - 1;
    tape.a.resize(hidden + 1);
    tape.dsig.resize(hidden + 1);
    tape.s.resize(hidden + 1);
    tape.t.resize(hidden + 1);
    tape.a[0] = x;
    for (std::size_t k = 1; k <= hidden; ++k) {
      Vec z = weights(k - 1) * tape.a[k - 1] + biases(k - 1);
      tape.a[k] = z.array().tanh().matrix();
      tape.dsig[k] = (Scalar{1} - tape.a[k].array().square()).matrix();
    }
    const auto w_out = weights(hidden);
    tape.value = (w_out * tape.a[hidden])(0) + biases(hidden)(0);
    tape.s[hidden] = w_out.transpose();
    for (std::size_t k = hidden; k >= 1; --k) {
      tape.t[k] = tape.s[k].cwiseProduct(tape.dsig[k]);
      tape.s[k - 1] = weights(k - 1).transpose() * tape.t[k];
    }
  }

  // Reverse-mode pass over J = cy * y + v . (dy/dx), including the path
  // through the input-gradient computation.
  void accumulate(const Tape& tape, Scalar cy, const Vec* v, Vec& grad) const {
    const std::size_t hidden = shapes_.size() - 1;
    std::vector<Vec> zbar(hidden + 1);
    for (std::size_t k = 1; k <= hidden; ++k) zbar[k] = Vec::Zero(tape.a[k].size());

    auto grad_w = [&](std::size_t layer) {
      const auto& s = shapes_[layer];
      return MatMap(grad.data() + s.weight_offset, s.rows, s.cols);
    };
    auto grad_b = [&](std::size_t layer) {
      const auto& s = shapes_[layer];
      return Eigen::Map<Vec>(grad.data() + s.bias_offset, s.rows);
    };

    if (v != nullptr && !v->isZero(0)) {
      Vec sbar = *v;
      for (std::size_t k = 1; k <= hidden; ++k) {
        grad_w(k - 1).noalias() += tape.t[k] * sbar.transpose();
        const Vec tbar = weights(k - 1) * sbar;
        // d(tanh')/dz = -2 tanh tanh'
        zbar[k].array() += tbar.array() * tape.s[k].array() * (Scalar{-2} * tape.a[k].array() * tape.dsig[k].array());
        sbar = tbar.cwiseProduct(tape.dsig[k]);
      }
      grad_w(hidden).noalias() += sbar.transpose();
    }

    grad_w(hidden).noalias() += cy * tape.a[hidden].transpose();
    grad_b(hidden)(0) += cy;
    Vec abar = cy * weights(hidden).transpose();
    for (std::size_t k = hidden; k >= 1; --k) {
      zbar[k] += abar.cwiseProduct(tape.dsig[k]);
      grad_w(k - 1).noalias() += zbar[k] * tape.a[k - 1].transpose();
      grad_b(k - 1) += zbar[k];
      if (k > 1) abar = weights(k - 1).transpose() * zbar[k];
    }
  }

  std::vector<LayerShape> shapes_;
  Vec params_;
};

}  // namespace percbf
