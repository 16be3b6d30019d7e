#pragma once

#include "percbf/common.hpp"

#include <cmath>

namespace percbf {

struct AdamParams {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected adaptive-moment update.
template <typename Scalar = double>
class Adam {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit Adam(AdamParams p = {}) : p_(p) {
    if (!(p_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(p_.beta1 > 0.0 && p_.beta1 < 1.0 && p_.beta2 > 0.0 && p_.beta2 < 1.0))
      throw ConfigError("Adam decay rates must lie in (0, 1)");
  }

  const AdamParams& params() const { return p_; }
  long step_count() const { return step_; }
  const Vec& first_moment() const { return m_; }
  const Vec& second_moment() const { return v_; }

  void step(Vec& params, const Vec& grads) {
    if (params.size() != grads.size()) throw ShapeError("Adam: gradient shape mismatch");
    if (m_.size() == 0) {
      m_ = Vec::Zero(params.size());
      v_ = Vec::Zero(params.size());
    } else if (m_.size() != params.size()) {
      throw ShapeError("Adam: parameter shape changed between steps");
    }
    ++step_;
    m_ = p_.beta1 * m_ + (1.0 - p_.beta1) * grads;
    v_ = p_.beta2 * v_ + (1.0 - p_.beta2) * grads.cwiseProduct(grads);
    const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(step_));
    params.array() -= p_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + p_.epsilon);
  }

 private:
  AdamParams p_;
  Vec m_, v_;
  long step_ = 0;
};

}  // namespace percbf
