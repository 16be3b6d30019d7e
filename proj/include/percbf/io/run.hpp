#pragma once

#include "percbf/envs/environment.hpp"
#include "percbf/envs/two_link_arm.hpp"
#include "percbf/envs/unicycle.hpp"
#include "percbf/io/output.hpp"
#include "percbf/io/run_config.hpp"
#include "percbf/trainer/metric.hpp"
#include "percbf/trainer/trainer.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace percbf::io {

/// Calls f with the environment selected by the config.
template <class F>
decltype(auto) visit_env(const RunConfig& cfg, F&& f) {
  if (cfg.env == EnvKind::Unicycle) return f(Unicycle(cfg.unicycle));
  return f(TwoLinkArm(cfg.arm));
}

struct RunSummary {
  std::uint64_t seed = 0;
  Sampler sampler = Sampler::Prioritized;
  std::vector<EpochReport> reports;
  Convergence convergence;
  double final_metric = 0.0;
  int aborted_episodes = 0;
  fs::path dir;

  std::vector<double> metric_series() const {
    std::vector<double> m;
    for (const auto& r : reports) m.push_back(r.metric);
    return m;
  }
};

inline fs::path seed_dir(const RunConfig& cfg, std::uint64_t seed) {
  return fs::path(cfg.out) / ("seed_" + std::to_string(seed));
}

/**
 * Trains one seed. With an empty `dir` nothing is written; otherwise the
 * directory receives config.json, metrics.csv, traj_<epoch>.csv every
 * traj_every epochs and after the last one, checkpoint.txt, and the buffer
 * record files when dump_buffers is set. Progress lines go to `log`.
 */
template <Environment Env>
RunSummary train_seed(const RunConfig& cfg, const Env& env, std::uint64_t seed, const fs::path& dir,
                      std::ostream* log = nullptr) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  Trainer<Env> trainer(env, tc);
  RunSummary s;
  s.seed = seed;
  s.sampler = tc.sampler;
  s.dir = dir;
  const bool write = !dir.empty();
  if (write) {
    RunConfig effective = cfg;
    effective.train.seed = seed;
    effective.seeds = {seed};
    atomic_write(dir / "config.json", [&](std::ostream& os) { os << to_json(effective).dump(2) << '\n'; });
  }
  for (int e = 0; e < tc.epochs; ++e) {
    const bool last = e + 1 == tc.epochs;
    const bool dump = write && (last || (cfg.traj_every > 0 && e % cfg.traj_every == 0));
    std::vector<TrajectoryPoint> traj;
    EpochReport r = trainer.train_epoch(dump ? &traj : nullptr);
    if (r.episode_aborted) ++s.aborted_episodes;
    if (dump)
      atomic_write(dir / ("traj_" + std::to_string(e) + ".csv"),
                   [&](std::ostream& os) { write_trajectory(os, traj, env.state_dim(), env.control_dim()); });
    if (log != nullptr) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "seed %llu %-7s epoch %4d  L+ %.4g  L- %.4g  Lgrad %.4g  m_e %.5f  viol %d%s%s\n",
                    static_cast<unsigned long long>(seed), to_string(tc.sampler), e, r.loss_safe, r.loss_unsafe,
                    r.loss_grad, r.metric, r.violations, r.episode_aborted ? "  episode aborted" : "",
                    r.aborted_rollouts > 0 ? "  rollout aborted" : "");
      *log << line << std::flush;
    }
    s.reports.push_back(r);
  }
  s.convergence = convergence_epoch(s.metric_series());
  s.final_metric = s.reports.back().metric;
  if (write) {
    atomic_write(dir / "metrics.csv", [&](std::ostream& os) { write_metrics(os, s.reports); });
    atomic_write(dir / "checkpoint.txt",
                 [&](std::ostream& os) { write_checkpoint(os, to_string(cfg.env), trainer.network()); });
    if (cfg.dump_buffers) {
      atomic_write(dir / "buffer_safe.csv", [&](std::ostream& os) { write_records(trainer.safe_buffer(), os); });
      atomic_write(dir / "buffer_unsafe.csv", [&](std::ostream& os) { write_records(trainer.unsafe_buffer(), os); });
      atomic_write(dir / "buffer_grad.csv", [&](std::ostream& os) { write_records(trainer.grad_buffer(), os); });
    }
  }
  return s;
}

/// Evaluates a stored residual on the config's evaluation set. Writes
/// eval.csv (metric,degenerate_steps,aborted_rollouts) and traj_eval.csv into
/// `dir` unless it is empty.
template <Environment Env>
MetricResult evaluate_checkpoint(const RunConfig& cfg, const Env& env, const Checkpoint& ckpt, const fs::path& dir) {
  check_compatible(ckpt, to_string(cfg.env), env.state_dim(), cfg.train.hidden);
  const LearnedCbf cbf([&env](const Vector& x) { return env.hcbf(x); }, &ckpt.net);
  const ClassK alpha(cfg.train.class_k_gain);
  MetricResult m = evaluate_metric(env, cbf, alpha, env.evaluation_starts(), cfg.train.horizon, !dir.empty());
  if (!dir.empty()) {
    atomic_write(dir / "eval.csv", [&](std::ostream& os) {
      os.precision(17);
      os << "metric,degenerate_steps,aborted_rollouts\n"
         << m.metric << ',' << m.degenerate_steps << ',' << m.aborted_rollouts << '\n';
    });
    atomic_write(dir / "traj_eval.csv",
                 [&](std::ostream& os) { write_trajectory(os, m.trajectory, env.state_dim(), env.control_dim()); });
  }
  return m;
}

}  // namespace percbf::io
