#pragma once

#include "percbf/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace percbf {

enum class Sampler { Prioritized, Uniform };

/// Orientation of the constraint hinge on sample (x, xdot):
///   ConditionViolation: max(0, -dh.xdot - alpha(h))  (penalises dh.xdot < -alpha(h))
///   AsPrinted:          max(0,  dh.xdot - alpha(h))
enum class GradLossForm { ConditionViolation, AsPrinted };

inline const char* to_string(Sampler s) { return s == Sampler::Prioritized ? "per" : "uniform"; }

inline Sampler parse_sampler(const std::string& s) {
  if (s == "per" || s == "prioritized") return Sampler::Prioritized;
  if (s == "uniform") return Sampler::Uniform;
  throw ConfigError("unknown sampler '" + s + "' (expected per or uniform)");
}

struct TrainConfig {
  double lambda = 100.0;         // unsafe-loss weight
  double learning_rate = 1e-4;
  int batch_size = 128;          // B
  int updates_per_epoch = 10;    // N_U
  int horizon = 1000;            // T, steps per episode
  int epochs = 200;
  double alpha_p = 1.0;          // forced to 0 for the uniform sampler
  double priority_epsilon = 1e-6;
  double class_k_gain = 1.0;
  std::uint64_t seed = 0;
  Sampler sampler = Sampler::Prioritized;
  double unsafe_margin = 0.0;    // distance < margin is labelled unsafe
  GradLossForm grad_loss_form = GradLossForm::ConditionViolation;
  std::vector<int> hidden{64, 64};
  double init_scale = 1e-2;
  std::size_t buffer_capacity = 1'000'000;

  /// Priority exponent actually used by the buffers.
  double effective_alpha() const { return sampler == Sampler::Uniform ? 0.0 : alpha_p; }

  /// Throws ConfigError unless every field is usable. Enforces B * N_U >= T so
  /// each freshly collected transition can be drawn at least once per epoch.
  void validate() const {
    if (batch_size <= 0 || updates_per_epoch <= 0 || horizon <= 0 || epochs <= 0)
      throw ConfigError("batch_size, updates_per_epoch, horizon and epochs must be positive");
    const long long coverage = static_cast<long long>(batch_size) * updates_per_epoch;
    if (coverage < horizon)
      throw ConfigError("inequality B * N_U >= T violated: batch_size * updates_per_epoch = " +
                        std::to_string(coverage) + " < horizon = " + std::to_string(horizon));
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(alpha_p >= 0.0 && alpha_p <= 1.0)) throw ConfigError("alpha_p must lie in [0, 1]");
    if (!(priority_epsilon > 0.0)) throw ConfigError("priority_epsilon must be positive");
    if (!(class_k_gain > 0.0)) throw ConfigError("class_k_gain must be positive");
    if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
    for (int h : hidden)
      if (h <= 0) throw ConfigError("hidden layer widths must be positive");
  }
};

}  // namespace percbf
