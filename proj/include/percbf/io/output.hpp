#pragma once

#include "percbf/common.hpp"
#include "percbf/network/dual_net.hpp"
#include "percbf/replay/transition.hpp"
#include "percbf/trainer/metric.hpp"
#include "percbf/trainer/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace percbf::io {

namespace fs = std::filesystem;

/// Writes through a sibling temporary file and renames it into place, so the
/// target is either complete or absent.
inline void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open '" + tmp.string() + "' for writing");
    body(os);
    os.flush();
    if (!os) {
      os.close();
      fs::remove(tmp);
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, path);
}

inline const char* metrics_header() { return "epoch,loss_safe,loss_unsafe,loss_grad,loss_total,metric,violations"; }

/// Per-epoch log. Wall-clock time is deliberately absent so identical runs
/// give identical files.
inline void write_metrics(std::ostream& os, const std::vector<EpochReport>& reports) {
  os.precision(17);
  os << metrics_header() << '\n';
  for (const auto& r : reports)
    os << r.epoch << ',' << r.loss_safe << ',' << r.loss_unsafe << ',' << r.loss_grad << ',' << r.loss_total << ','
       << r.metric << ',' << r.violations << '\n';
}

/// Evaluation rollouts, one row per time step:
///   rollout,t,x_0..x_{n-1},u_0..u_{m-1},distance,barrier
/// Controls are empty on each rollout's final row.
inline void write_trajectory(std::ostream& os, const std::vector<TrajectoryPoint>& traj, int state_dim,
                             int control_dim) {
  os.precision(17);
  os << "rollout,t";
  for (int i = 0; i < state_dim; ++i) os << ",x_" << i;
  for (int i = 0; i < control_dim; ++i) os << ",u_" << i;
  os << ",distance,barrier\n";
  for (const auto& p : traj) {
    os << p.rollout << ',' << p.t;
    for (Eigen::Index i = 0; i < p.state.size(); ++i) os << ',' << p.state[i];
    for (int i = 0; i < control_dim; ++i) {
      os << ',';
      if (p.control.size() == control_dim) os << p.control[i];
    }
    os << ',' << p.distance << ',' << p.barrier << '\n';
  }
}

inline constexpr const char* kCheckpointMagic = "percbf-checkpoint";

/// Checkpoint: a header naming the environment and its state dimension,
/// followed by the network block.
inline void write_checkpoint(std::ostream& os, const std::string& env_name, const DualNet<double>& net) {
  os << kCheckpointMagic << " 1\nenv " << env_name << '\n';
  net.save(os);
}

struct Checkpoint {
  std::string env;
  DualNet<double> net;
};

inline Checkpoint read_checkpoint(std::istream& is) {
  std::string magic, key;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic || version != 1)
    throw CheckpointMismatch("not a percbf checkpoint (bad header)");
  Checkpoint c;
  if (!(is >> key >> c.env) || key != "env") throw CheckpointMismatch("checkpoint header lacks the environment");
  try {
    c.net = DualNet<double>::load(is);
  } catch (const Error& e) {
    throw CheckpointMismatch(std::string("checkpoint network block: ") + e.what());
  }
  return c;
}

inline Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointMismatch("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

/// Throws CheckpointMismatch unless the checkpoint was trained on `env_name`
/// with the given input dimension and hidden widths.
inline void check_compatible(const Checkpoint& c, const std::string& env_name, int state_dim,
                             const std::vector<int>& hidden) {
  if (c.env != env_name)
    throw CheckpointMismatch("checkpoint environment '" + c.env + "' does not match config '" + env_name + "'");
  if (c.net.input_dim() != state_dim)
    throw CheckpointMismatch("checkpoint input dimension " + std::to_string(c.net.input_dim()) +
                             " does not match state dimension " + std::to_string(state_dim));
  const auto shapes = c.net.layer_shapes();
  std::vector<int> widths;
  for (std::size_t k = 0; k + 1 < shapes.size(); ++k) widths.push_back(shapes[k].first);
  if (widths != hidden) throw CheckpointMismatch("checkpoint hidden layer widths do not match config");
}

}  // namespace percbf::io
