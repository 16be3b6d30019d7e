#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/environment.hpp"
#include "percbf/network/adam.hpp"
#include "percbf/network/dual_net.hpp"
#include "percbf/replay/per_buffer.hpp"
#include "percbf/replay/transition.hpp"
#include "percbf/safety/qp_filter.hpp"
#include "percbf/trainer/config.hpp"
#include "percbf/trainer/losses.hpp"
#include "percbf/trainer/metric.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace percbf {

struct EpisodeStats {
  int steps = 0;
  int violations = 0;        // steps ending with d(x) < 0
  int degenerate_steps = 0;  // steps where the filter fell back to u_perf
  int safe_pushed = 0;
  int unsafe_pushed = 0;
  bool aborted = false;      // integration turned non-finite; episode ended early
  std::string abort_reason;
};

struct UpdateStats {
  LossTerms losses;
  bool safe_used = false;
  bool unsafe_used = false;
  bool grad_used = false;
};

struct EpochReport {
  int epoch = 0;
  double loss_safe = 0.0;
  double loss_unsafe = 0.0;
  double loss_grad = 0.0;
  double loss_total = 0.0;
  double metric = 0.0;
  int violations = 0;
  int degenerate_steps = 0;
  bool episode_aborted = false;
  int aborted_rollouts = 0;
  double wall_seconds = 0.0;
};

/**
 * Learning loop: each epoch collects one filtered episode into the safe,
 * unsafe and constraint buffers, then performs N_U prioritized (or uniform)
 * updates of the residual and evaluates m_e.
 *
 * Two random streams derive from the seed: one for episode starts, one for
 * replay sampling. The network initialisation also uses the seed, so both
 * samplers see identical data until the first update.
 */
template <Environment Env>
class Trainer {
 public:
  Trainer(Env env, TrainConfig cfg)
      : env_(std::move(env)),
        cfg_((cfg.validate(), std::move(cfg))),
        net_(DualNet<double>::init(cfg_.seed, {env_.state_dim(), cfg_.hidden}, cfg_.init_scale)),
        adam_(AdamParams{cfg_.learning_rate}),
        alpha_(cfg_.class_k_gain),
        safe_(buffer_params()),
        unsafe_(buffer_params()),
        grad_(buffer_params()),
        collect_rng_(cfg_.seed),
        sample_rng_(cfg_.seed ^ 0x9E3779B97F4A7C15ULL) {}

  const Env& env() const { return env_; }
  const TrainConfig& config() const { return cfg_; }
  const DualNet<double>& network() const { return net_; }
  DualNet<double>& network() { return net_; }
  const ClassK& class_k() const { return alpha_; }
  const PerBuffer<Transition>& safe_buffer() const { return safe_; }
  const PerBuffer<Transition>& unsafe_buffer() const { return unsafe_; }
  const PerBuffer<Transition>& grad_buffer() const { return grad_; }
  int epochs_done() const { return epoch_; }

  LearnedCbf learned_cbf() const {
    const Env* env = &env_;
    return LearnedCbf([env](const Vector& x) { return env->hcbf(x); }, &net_);
  }

  EpisodeStats collect_episode() {
    EpisodeStats stats;
    const LearnedCbf cbf = learned_cbf();
    Vector x = env_.initial_state(collect_rng_);
    for (int k = 0; k < cfg_.horizon; ++k) {
      bool degenerate = false;
      const Vector u = filtered_control(env_, x, cbf, alpha_, &degenerate);
      StepResult next;
      try {
        next = step(env_, x, u);
      } catch (const NonFiniteError& e) {
        stats.aborted = true;
        stats.abort_reason = "episode aborted at step " + std::to_string(k) + ": " + e.what();
        break;
      }
      const double d = env_.distance(x);
      const double d_next = env_.distance(next.next);
      const Label label = classify(d_next, cfg_.unsafe_margin);
      if (d_next < 0.0) ++stats.violations;
      if (degenerate) ++stats.degenerate_steps;
      Transition t{x, u, next.applied_derivative, d, label};
      grad_.push(t);
      if (label == Label::Unsafe) {
        unsafe_.push(std::move(t));
        ++stats.unsafe_pushed;
      } else {
        safe_.push(std::move(t));
        ++stats.safe_pushed;
      }
      x = std::move(next.next);
      ++stats.steps;
    }
    return stats;
  }

  /// One gradient step on freshly sampled batches, followed by the priority
  /// write-back. Buffers that are empty or have zero total priority skip
  /// their loss term.
  UpdateStats update() {
    UpdateStats stats;
    std::vector<Sampled<Transition>> s_safe, s_unsafe, s_grad;
    stats.safe_used = draw(safe_, s_safe);
    stats.unsafe_used = draw(unsafe_, s_unsafe);
    stats.grad_used = draw(grad_, s_grad);

    LossBatches batches;
    for (const auto& s : s_safe) batches.safe.push_back(s.item);
    for (const auto& s : s_unsafe) batches.unsafe.push_back(s.item);
    for (const auto& s : s_grad) batches.grad.push_back(s.item);

    LossPartials partials;
    stats.losses = compute_losses(batches, learned_cbf(), cfg_.lambda, alpha_, cfg_.grad_loss_form, &partials);
    if (!partials.inputs.empty()) {
      const Vector g = net_.param_grad(partials.inputs, partials.dvalue, partials.dgrad);
      adam_.step(net_.parameters(), g);
    }
    write_back(safe_, s_safe, stats.losses.safe_hinge);
    write_back(unsafe_, s_unsafe, stats.losses.unsafe_hinge);
    write_back(grad_, s_grad, stats.losses.grad_hinge);
    return stats;
  }

  MetricResult evaluate(bool keep_trajectory = false) const {
    return evaluate_metric(env_, learned_cbf(), alpha_, env_.evaluation_starts(), cfg_.horizon, keep_trajectory);
  }

  /// Runs one epoch. When `trajectory` is given, the evaluation rollouts are
  /// recorded into it.
  EpochReport train_epoch(std::vector<TrajectoryPoint>* trajectory = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochReport r;
    r.epoch = epoch_;
    const EpisodeStats ep = collect_episode();
    r.violations = ep.violations;
    r.degenerate_steps = ep.degenerate_steps;
    r.episode_aborted = ep.aborted;
    for (int k = 0; k < cfg_.updates_per_epoch; ++k) {
      const UpdateStats u = update();
      r.loss_safe += u.losses.safe;
      r.loss_unsafe += u.losses.unsafe;
      r.loss_grad += u.losses.grad;
    }
    const double inv = 1.0 / cfg_.updates_per_epoch;
    r.loss_safe *= inv;
    r.loss_unsafe *= inv;
    r.loss_grad *= inv;
    r.loss_total = r.loss_safe + cfg_.lambda * r.loss_unsafe + r.loss_grad;
    MetricResult m = evaluate(trajectory != nullptr);
    r.metric = m.metric;
    if (trajectory != nullptr) *trajectory = std::move(m.trajectory);
    r.aborted_rollouts = m.aborted_rollouts;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++epoch_;
    return r;
  }

 private:
  PerParams buffer_params() const {
    return {cfg_.buffer_capacity, cfg_.effective_alpha(), cfg_.priority_epsilon, 1.0};
  }

  bool draw(const PerBuffer<Transition>& buf, std::vector<Sampled<Transition>>& out) {
    if (buf.empty() || !(buf.total_priority() > 0.0)) return false;
    out = buf.sample(static_cast<std::size_t>(cfg_.batch_size), sample_rng_);
    return true;
  }

  static void write_back(PerBuffer<Transition>& buf, const std::vector<Sampled<Transition>>& sampled,
                         const std::vector<double>& hinges) {
    if (sampled.empty()) return;
    std::vector<std::size_t> idx;
    idx.reserve(sampled.size());
    for (const auto& s : sampled) idx.push_back(s.index);
    buf.update_priorities(idx, compute_priorities(hinges));
  }

  Env env_;
  TrainConfig cfg_;
  DualNet<double> net_;
  Adam<double> adam_;
  ClassK alpha_;
  PerBuffer<Transition> safe_, unsafe_, grad_;
  Rng collect_rng_, sample_rng_;
  int epoch_ = 0;
};

}  // namespace percbf
