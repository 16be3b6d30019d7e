#include "percbf/io/run.hpp"
#include "percbf/verify/suites.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace percbf;

struct Overrides {
  std::string config;
  std::string env;
  std::string sampler;
  std::vector<std::uint64_t> seeds;
  int epochs = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--env", o.env, "unicycle or two-link-arm");
  cmd->add_option("--sampler", o.sampler, "per or uniform");
  cmd->add_option("--seed,--seeds", o.seeds, "seed list, e.g. 0,1,2")->delimiter(',');
  cmd->add_option("--epochs", o.epochs, "number of epochs");
  cmd->add_option("--out", o.out, "output directory");
}

io::RunConfig resolve(const Overrides& o) {
  std::optional<io::EnvKind> env;
  if (!o.env.empty()) env = io::parse_env(o.env);
  io::RunConfig cfg = o.config.empty() ? io::defaults_for(env.value_or(io::EnvKind::Unicycle))
                                       : io::load_run_config(o.config, env);
  if (!o.sampler.empty()) cfg.train.sampler = parse_sampler(o.sampler);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.epochs != 0) cfg.train.epochs = o.epochs;
  if (!o.out.empty()) cfg.out = o.out;
  cfg.validate();
  return cfg;
}

int cmd_train(const Overrides& o, bool quiet) {
  const io::RunConfig cfg = resolve(o);
  std::vector<io::RunSummary> done;
  for (std::uint64_t seed : cfg.seeds) {
    done.push_back(io::visit_env(cfg, [&](const auto& env) {
      return io::train_seed(cfg, env, seed, io::seed_dir(cfg, seed), quiet ? nullptr : &std::cerr);
    }));
  }
  for (const auto& s : done) {
    std::printf("seed %llu sampler %s: convergence epoch %d%s, final m_e %.6f%s -> %s\n",
                static_cast<unsigned long long>(s.seed), to_string(s.sampler), s.convergence.epoch,
                s.convergence.converged ? "" : " (not converged)", s.final_metric,
                s.aborted_episodes > 0 ? (" [" + std::to_string(s.aborted_episodes) + " aborted episodes]").c_str()
                                       : "",
                s.dir.string().c_str());
  }
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& checkpoint) {
  const io::RunConfig cfg = resolve(o);
  const io::Checkpoint ckpt = io::load_checkpoint(checkpoint);
  const MetricResult m = io::visit_env(cfg, [&](const auto& env) {
    return io::evaluate_checkpoint(cfg, env, ckpt, io::fs::path(cfg.out));
  });
  std::printf("m_e %.6f (degenerate steps %d, aborted rollouts %d) -> %s\n", m.metric, m.degenerate_steps,
              m.aborted_rollouts, cfg.out.c_str());
  return 0;
}

int cmd_verify(std::vector<std::string> suites) {
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = verify::suite_names();
  bool ok = true;
  std::printf("%-10s %-6s %9s  %s\n", "suite", "result", "seconds", "detail");
  for (const auto& name : suites) {
    const verify::CheckResult r = verify::run_suite(name);
    ok = ok && r.passed;
    std::printf("%-10s %-6s %9.3f  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prioritized-replay refinement of control barrier functions"};
  app.require_subcommand(1);

  Overrides train_o, eval_o;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train learned barriers and write logs, trajectories, checkpoints");
  add_common(train, train_o);
  train->add_flag("--quiet", quiet, "suppress per-epoch progress");

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the evaluation set without training");
  add_common(eval, eval_o);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file written by train")->required();

  std::vector<std::string> suites;
  auto* ver = app.add_subcommand("verify", "run executable checks and print a pass/fail table");
  ver->add_option("suites", suites, "theorem1 theorem2 gradcheck qp sumtree geometry invariance (default: all)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_o, quiet);
    if (*eval) return cmd_eval(eval_o, checkpoint);
    return cmd_verify(suites);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
