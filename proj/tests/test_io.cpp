#include "percbf/io/output.hpp"
#include "percbf/io/run.hpp"
#include "percbf/io/run_config.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace percbf;
using namespace percbf::io;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("percbf_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny_run(EnvKind env = EnvKind::Unicycle) {
  RunConfig c = defaults_for(env);
  c.train.epochs = 3;
  c.train.horizon = 120;
  c.train.updates_per_epoch = 1;
  c.train.buffer_capacity = 2048;
  c.traj_every = 2;
  return c;
}

}  // namespace

TEST(RunConfig, EnvironmentDefaults) {
  const auto u = defaults_for(EnvKind::Unicycle);
  EXPECT_EQ(u.train.epochs, 200);
  EXPECT_EQ(u.train.horizon, 1000);
  EXPECT_EQ(u.train.updates_per_epoch, 10);
  EXPECT_EQ(u.train.batch_size, 128);
  EXPECT_EQ(u.train.lambda, 100.0);
  EXPECT_EQ(u.train.learning_rate, 1e-4);
  EXPECT_NO_THROW(u.validate());
  const auto a = defaults_for(EnvKind::TwoLinkArm);
  EXPECT_EQ(a.train.epochs, 80);
  EXPECT_EQ(a.train.horizon, 3000);
  EXPECT_EQ(a.train.updates_per_epoch, 30);
  EXPECT_EQ(a.train.batch_size, 128);
  EXPECT_EQ(a.train.unsafe_margin, 0.05);
  EXPECT_NO_THROW(a.validate());
}

TEST(RunConfig, PartialDocumentOverridesDefaults) {
  const auto c = from_json(json::parse(R"({"env": "arm", "train": {"epochs": 5, "sampler": "uniform"},
                                           "arm": {"target": [0.5, 1.5]}, "seeds": [3, 4]})"));
  EXPECT_EQ(c.env, EnvKind::TwoLinkArm);
  EXPECT_EQ(c.train.epochs, 5);
  EXPECT_EQ(c.train.horizon, 3000);
  EXPECT_EQ(c.train.sampler, Sampler::Uniform);
  EXPECT_EQ(c.arm.target, Vector2(0.5, 1.5));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
}

TEST(RunConfig, UnknownKeysRejected) {
  EXPECT_THROW(from_json(json::parse(R"({"trian": {}})")), ConfigError);
  try {
    from_json(json::parse(R"({"train": {"batchsize": 4}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("batchsize"), std::string::npos);
  }
  EXPECT_THROW(from_json(json::parse(R"({"env": "quadrotor"})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"train": {"epochs": "many"}})")), ConfigError);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = defaults_for(EnvKind::TwoLinkArm);
  c.train.alpha_p = 0.6;
  c.train.grad_loss_form = GradLossForm::AsPrinted;
  c.arm.eval_q = {{0.1, 0.2}};
  c.seeds = {9};
  c.dump_buffers = true;
  const RunConfig back = from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.train.grad_loss_form, GradLossForm::AsPrinted);
}

TEST(RunConfig, CoverageInequalityReportedOnLoad) {
  const fs::path dir = scratch("cfg");
  const fs::path path = dir / "bad.json";
  std::ofstream(path) << R"({ // comments are allowed
    "train": {"batch_size": 16, "updates_per_epoch": 10, "horizon": 1000}})";
  const RunConfig c = load_run_config(path.string());
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("B * N_U >= T"), std::string::npos);
  }
  EXPECT_THROW(load_run_config((dir / "missing.json").string()), ConfigError);
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_THROW(load_run_config((dir / "broken.json").string()), ConfigError);
}

TEST(Output, AtomicWriteReplacesTarget) {
  const fs::path dir = scratch("atomic");
  const fs::path p = dir / "sub" / "file.txt";
  atomic_write(p, [](std::ostream& os) { os << "first\n"; });
  atomic_write(p, [](std::ostream& os) { os << "second\n"; });
  EXPECT_EQ(slurp(p), "second\n");
  EXPECT_FALSE(fs::exists(dir / "sub" / "file.txt.tmp"));
  EXPECT_THROW(atomic_write(p, [](std::ostream&) { throw Error("boom"); }), Error);
  EXPECT_EQ(slurp(p), "second\n");
}

TEST(Output, MetricsFormat) {
  EpochReport r;
  r.epoch = 2;
  r.loss_safe = 0.5;
  r.loss_unsafe = 0.25;
  r.loss_grad = 0.125;
  r.loss_total = 25.625;
  r.metric = -0.0625;
  r.violations = 3;
  std::ostringstream os;
  write_metrics(os, {r});
  EXPECT_EQ(os.str(),
            "epoch,loss_safe,loss_unsafe,loss_grad,loss_total,metric,violations\n2,0.5,0.25,0.125,25.625,-0.0625,3\n");
}

TEST(Output, TrajectoryFormat) {
  Vector x(2), u(1);
  x << 1, 2;
  u << 0.5;
  std::ostringstream os;
  write_trajectory(os, {{0, 0.0, x, u, 0.25, 1.5}, {0, 0.01, x, Vector(), 0.25, 1.5}}, 2, 1);
  EXPECT_EQ(os.str(), "rollout,t,x_0,x_1,u_0,distance,barrier\n0,0,1,2,0.5,0.25,1.5\n0,0.01,1,2,,0.25,1.5\n");
}

TEST(Checkpoint, RoundTripAndMismatch) {
  const auto net = DualNet<double>::init(4, {3, {64, 64}});
  std::stringstream ss;
  write_checkpoint(ss, "unicycle", net);
  const Checkpoint c = read_checkpoint(ss);
  EXPECT_EQ(c.env, "unicycle");
  EXPECT_EQ(c.net.parameters(), net.parameters());
  EXPECT_NO_THROW(check_compatible(c, "unicycle", 3, {64, 64}));
  EXPECT_THROW(check_compatible(c, "two-link-arm", 3, {64, 64}), CheckpointMismatch);
  EXPECT_THROW(check_compatible(c, "unicycle", 4, {64, 64}), CheckpointMismatch);
  EXPECT_THROW(check_compatible(c, "unicycle", 3, {32, 32}), CheckpointMismatch);
  std::stringstream junk("percbf-checkpoint 2\nenv unicycle\n");
  EXPECT_THROW(read_checkpoint(junk), CheckpointMismatch);
  std::stringstream truncated("percbf-checkpoint 1\nenv unicycle\npercbf-dualnet 1\n1\n1 3\n0.5\n");
  EXPECT_THROW(read_checkpoint(truncated), CheckpointMismatch);
  EXPECT_THROW(load_checkpoint("/nonexistent/checkpoint.txt"), CheckpointMismatch);
}

TEST(Run, WritesArtifacts) {
  const fs::path dir = scratch("run");
  RunConfig cfg = tiny_run();
  cfg.dump_buffers = true;
  const auto s = train_seed(cfg, Unicycle(cfg.unicycle), 0, dir);
  EXPECT_EQ(s.reports.size(), 3u);
  for (const char* f : {"config.json", "metrics.csv", "checkpoint.txt", "traj_0.csv", "traj_2.csv",
                        "buffer_safe.csv", "buffer_unsafe.csv", "buffer_grad.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "traj_1.csv"));
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".tmp");

  const RunConfig saved = load_run_config((dir / "config.json").string());
  EXPECT_EQ(saved.seeds, std::vector<std::uint64_t>{0});
  EXPECT_EQ(saved.train.epochs, 3);

  std::istringstream metrics(slurp(dir / "metrics.csv"));
  std::string line;
  int rows = 0;
  std::getline(metrics, line);
  EXPECT_EQ(line, metrics_header());
  while (std::getline(metrics, line)) ++rows;
  EXPECT_EQ(rows, 3);

  std::istringstream grad(slurp(dir / "buffer_grad.csv"));
  int records = 0;
  while (std::getline(grad, line)) ++records;
  EXPECT_EQ(records, 3 * 120);
}

TEST(Run, IdenticalRunsGiveIdenticalFiles) {
  const fs::path a = scratch("same_a"), b = scratch("same_b");
  const RunConfig cfg = tiny_run();
  train_seed(cfg, Unicycle(cfg.unicycle), 5, a);
  train_seed(cfg, Unicycle(cfg.unicycle), 5, b);
  for (const char* f : {"metrics.csv", "traj_2.csv", "checkpoint.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Run, EvaluateCheckpointReproducesFinalMetric) {
  const fs::path dir = scratch("eval");
  const RunConfig cfg = tiny_run();
  const Unicycle env(cfg.unicycle);
  const auto s = train_seed(cfg, env, 1, dir);
  const Checkpoint c = load_checkpoint(dir / "checkpoint.txt");
  const fs::path out = dir / "eval";
  const auto m1 = evaluate_checkpoint(cfg, env, c, out);
  const auto m2 = evaluate_checkpoint(cfg, env, c, {});
  EXPECT_EQ(m1.metric, s.final_metric);
  EXPECT_EQ(m1.metric, m2.metric);
  EXPECT_TRUE(fs::exists(out / "eval.csv"));
  EXPECT_TRUE(fs::exists(out / "traj_eval.csv"));
  const RunConfig arm = tiny_run(EnvKind::TwoLinkArm);
  EXPECT_THROW(evaluate_checkpoint(arm, TwoLinkArm(arm.arm), c, {}), CheckpointMismatch);
}

TEST(Run, FreshResidualTracksHandcraftedController) {
  const RunConfig cfg = defaults_for(EnvKind::Unicycle);
  const Unicycle env(cfg.unicycle);
  Checkpoint fresh{"unicycle", DualNet<double>::init(0, {3, cfg.train.hidden}, cfg.train.init_scale)};
  const double learned = evaluate_checkpoint(cfg, env, fresh, {}).metric;
  const LearnedCbf exact([&](const Vector& x) { return env.hcbf(x); }, nullptr);
  const double handcrafted =
      evaluate_metric(env, exact, ClassK(cfg.train.class_k_gain), env.evaluation_starts(), cfg.train.horizon).metric;
  EXPECT_LT(std::abs(learned - handcrafted), 0.05);
}
