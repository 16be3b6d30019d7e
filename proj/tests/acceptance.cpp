// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: percbf_acceptance [--cli PATH] [criterion numbers...]

#include "percbf/io/run.hpp"
#include "percbf/io/run_config.hpp"
#include "percbf/verify/suites.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace percbf;
using namespace percbf::io;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome from_suite(const std::string& name, double time_limit) {
  const verify::CheckResult r = verify::run_suite(name);
  Outcome o{r.passed, r.detail};
  if (time_limit > 0.0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "; %.2f s (limit %.0f s)", r.seconds, time_limit);
    o.detail += buf;
    o.passed = o.passed && r.seconds < time_limit;
  }
  return o;
}

struct Pair {
  RunSummary per, uniform;
  double per_seconds = 0.0, uniform_seconds = 0.0;
};

template <Environment Env>
Pair run_pair(const RunConfig& base, const Env& env, std::uint64_t seed) {
  Pair p;
  RunConfig cfg = base;
  cfg.train.sampler = Sampler::Prioritized;
  auto t0 = std::chrono::steady_clock::now();
  p.per = train_seed(cfg, env, seed, {});
  p.per_seconds = seconds_since(t0);
  cfg.train.sampler = Sampler::Uniform;
  t0 = std::chrono::steady_clock::now();
  p.uniform = train_seed(cfg, env, seed, {});
  p.uniform_seconds = seconds_since(t0);
  return p;
}

std::string conv(const Convergence& c) {
  return std::to_string(c.epoch) + (c.converged ? "" : "(nc)");
}

// Ordering and final-metric parity over a seed set.
template <Environment Env>
Outcome comparison(const RunConfig& cfg, const Env& env, const std::vector<std::uint64_t>& seeds,
                   double run_limit_seconds) {
  Outcome o{true, {}};
  std::ostringstream os;
  os.precision(4);
  double slowest = 0.0;
  for (std::uint64_t seed : seeds) {
    const Pair p = run_pair(cfg, env, seed);
    const bool order = p.per.convergence.epoch <= p.uniform.convergence.epoch;
    const double gap = std::abs(p.per.final_metric - p.uniform.final_metric);
    const bool parity = gap <= 0.05;
    o.passed = o.passed && order && parity;
    slowest = std::max({slowest, p.per_seconds, p.uniform_seconds});
    os << "seed " << seed << ": conv per " << conv(p.per.convergence) << " vs uniform "
       << conv(p.uniform.convergence) << (order ? " ok" : " WRONG ORDER") << ", final m_e " << p.per.final_metric
       << " vs " << p.uniform.final_metric << " (gap " << gap << (parity ? " ok" : " > 0.05") << ")";
    if (p.per.aborted_episodes + p.uniform.aborted_episodes > 0)
      os << ", aborted episodes " << p.per.aborted_episodes << "/" << p.uniform.aborted_episodes;
    os << "; ";
  }
  os << "slowest run " << slowest << " s (limit " << run_limit_seconds << " s)";
  o.passed = o.passed && slowest < run_limit_seconds;
  o.detail = os.str();
  return o;
}

Outcome criterion8() {
  const RunConfig cfg = defaults_for(EnvKind::Unicycle);
  return comparison(cfg, Unicycle(cfg.unicycle), {0, 1, 2}, 30 * 60.0);
}

Outcome criterion9() {
  RunConfig reduced = defaults_for(EnvKind::TwoLinkArm);
  reduced.train.epochs = 40;
  reduced.train.horizon = 1500;
  reduced.train.updates_per_epoch = 15;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = comparison(reduced, TwoLinkArm(reduced.arm), {0, 1}, 2 * 3600.0);
  const double reduced_seconds = seconds_since(t0);

  const RunConfig full = defaults_for(EnvKind::TwoLinkArm);
  std::ostringstream os;
  os.precision(4);
  os << "; reduced scale total " << reduced_seconds << " s; full scale (" << full.train.epochs << " epochs, T "
     << full.train.horizon << "): ";
  bool completed = true;
  for (Sampler s : {Sampler::Prioritized, Sampler::Uniform}) {
    RunConfig cfg = full;
    cfg.train.sampler = s;
    const auto t1 = std::chrono::steady_clock::now();
    try {
      const RunSummary r = train_seed(cfg, TwoLinkArm(cfg.arm), 0, {});
      const bool done = static_cast<int>(r.reports.size()) == full.train.epochs;
      completed = completed && done;
      os << to_string(s) << (done ? " completed" : " INCOMPLETE") << " in " << seconds_since(t1)
         << " s, final m_e " << r.final_metric << ", conv " << conv(r.convergence) << "; ";
    } catch (const std::exception& e) {
      completed = false;
      os << to_string(s) << " FAILED: " << e.what() << "; ";
    }
  }
  o.passed = o.passed && completed;
  o.detail += os.str();
  return o;
}

Outcome criterion10(const std::string& cli) {
  const std::string needle = "B * N_U >= T";
  const fs::path dir = fs::temp_directory_path() / "percbf_acceptance";
  fs::create_directories(dir);
  const fs::path path = dir / "violating.json";
  std::ofstream(path) << R"({"env": "unicycle", "train": {"batch_size": 16, "updates_per_epoch": 10, "horizon": 1000}})";

  Outcome o{false, {}};
  bool library_rejects = false;
  std::string message;
  try {
    load_run_config(path.string()).validate();
  } catch (const ConfigError& e) {
    message = e.what();
    library_rejects = message.find(needle) != std::string::npos;
  }
  o.detail = "library: " + (message.empty() ? std::string("accepted") : "'" + message + "'");
  o.passed = library_rejects;

  if (!cli.empty()) {
    const fs::path log = dir / "cli_stderr.txt";
    const std::string cmd = "\"" + cli + "\" train --config \"" + path.string() + "\" --out \"" +
                            (dir / "runs").string() + "\" --quiet 2> \"" + log.string() + "\"";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string err = ss.str();
    while (!err.empty() && err.back() == '\n') err.pop_back();
    const bool cli_rejects = status != 0 && err.find(needle) != std::string::npos;
    o.passed = o.passed && cli_rejects;
    o.detail += "; cli exit " + std::string(status != 0 ? "nonzero" : "zero") + ": '" + err + "'";
    o.passed = o.passed && !fs::exists(dir / "runs" / "seed_0" / "metrics.csv");
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else only.insert(std::stoi(a));
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"theorem 1 gradient identity", [] { return from_suite("theorem1", 5.0); }},
      {"theorem 2 passage ordering", [] { return from_suite("theorem2", 1.0); }},
      {"network gradient checks", [] { return from_suite("gradcheck", 30.0); }},
      {"QP filter vs oracle", [] { return from_suite("qp", 0.0); }},
      {"sum tree invariants", [] { return from_suite("sumtree", 0.0); }},
      {"geometry vs brute force", [] { return from_suite("geometry", 0.0); }},
      {"forward invariance smoke test", [] { return from_suite("invariance", 30.0); }},
      {"unicycle PER vs uniform", criterion8},
      {"two-link arm PER vs uniform", criterion9},
      {"coverage inequality enforcement", [&] { return criterion10(cli); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int n = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::printf("criterion %2d %s  %s  [%.1f s]  %s\n", n, o.passed ? "PASS" : "FAIL", criteria[k].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
