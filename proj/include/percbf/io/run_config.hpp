#pragma once

#include "percbf/common.hpp"
#include "percbf/envs/two_link_arm.hpp"
#include "percbf/envs/unicycle.hpp"
#include "percbf/trainer/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace percbf::io {

using json = nlohmann::json;

enum class EnvKind { Unicycle, TwoLinkArm };

inline const char* to_string(EnvKind e) { return e == EnvKind::Unicycle ? "unicycle" : "two-link-arm"; }

inline EnvKind parse_env(const std::string& s) {
  if (s == "unicycle") return EnvKind::Unicycle;
  if (s == "two-link-arm" || s == "arm") return EnvKind::TwoLinkArm;
  throw ConfigError("unknown environment '" + s + "' (expected unicycle or two-link-arm)");
}

inline const char* to_string(GradLossForm f) {
  return f == GradLossForm::ConditionViolation ? "condition_violation" : "as_printed";
}

inline GradLossForm parse_grad_loss_form(const std::string& s) {
  if (s == "condition_violation") return GradLossForm::ConditionViolation;
  if (s == "as_printed") return GradLossForm::AsPrinted;
  throw ConfigError("unknown grad_loss_form '" + s + "' (expected condition_violation or as_printed)");
}

/// Everything one `train` invocation needs. Seeds run sequentially; each run
/// writes into <out>/seed_<seed>/.
struct RunConfig {
  EnvKind env = EnvKind::Unicycle;
  TrainConfig train;
  UnicycleParams unicycle;
  ArmParams arm;
  std::string out = "runs";
  std::vector<std::uint64_t> seeds{0};
  int traj_every = 10;  // dump evaluation trajectories every k epochs (0: final epoch only)
  bool dump_buffers = false;

  /// Constructs both environments and checks the training block; throws
  /// ConfigError on the first problem.
  void validate() const {
    train.validate();
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (traj_every < 0) throw ConfigError("traj_every must be non-negative");
    if (out.empty()) throw ConfigError("out must name a directory");
    if (env == EnvKind::Unicycle) {
      const Unicycle u(unicycle);
      if (u.evaluation_starts().empty()) throw ConfigError("unicycle eval_offsets must not be empty");
    } else {
      const TwoLinkArm a(arm);
      if (a.evaluation_starts().empty()) throw ConfigError("arm eval_q must not be empty");
    }
  }
};

/// Experiment defaults per environment: unicycle 200 epochs x 1000 steps with
/// 10 updates; arm 80 x 3000 with 30 updates and a 0.05 m enlarged unsafe set.
inline RunConfig defaults_for(EnvKind env) {
  RunConfig c;
  c.env = env;
  if (env == EnvKind::Unicycle) {
    c.train.epochs = 200;
    c.train.horizon = 1000;
    c.train.updates_per_epoch = 10;
    c.train.unsafe_margin = 0.0;
  } else {
    c.train.epochs = 80;
    c.train.horizon = 3000;
    c.train.updates_per_epoch = 30;
    c.train.unsafe_margin = 0.05;
  }
  return c;
}

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void get(const json& obj, const char* key, const std::string& where, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline Vector2 to_vec2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void get_vec2(const json& obj, const char* key, const std::string& where, Vector2& dst) {
  if (obj.contains(key)) dst = to_vec2(obj.at(key), where + "." + key);
}

inline json vec2_json(const Vector2& v) { return json::array({v.x(), v.y()}); }

inline void apply_train(const json& j, TrainConfig& t) {
  const std::string w = "train";
  check_keys(j, w,
             {"lambda", "learning_rate", "batch_size", "updates_per_epoch", "horizon", "epochs", "alpha_p",
              "priority_epsilon", "class_k_gain", "seed", "sampler", "unsafe_margin", "grad_loss_form", "hidden",
              "init_scale", "buffer_capacity"});
  get(j, "lambda", w, t.lambda);
  get(j, "learning_rate", w, t.learning_rate);
  get(j, "batch_size", w, t.batch_size);
  get(j, "updates_per_epoch", w, t.updates_per_epoch);
  get(j, "horizon", w, t.horizon);
  get(j, "epochs", w, t.epochs);
  get(j, "alpha_p", w, t.alpha_p);
  get(j, "priority_epsilon", w, t.priority_epsilon);
  get(j, "class_k_gain", w, t.class_k_gain);
  get(j, "seed", w, t.seed);
  get(j, "unsafe_margin", w, t.unsafe_margin);
  get(j, "hidden", w, t.hidden);
  get(j, "init_scale", w, t.init_scale);
  get(j, "buffer_capacity", w, t.buffer_capacity);
  if (j.contains("sampler")) t.sampler = parse_sampler(j.at("sampler").get<std::string>());
  if (j.contains("grad_loss_form")) t.grad_loss_form = parse_grad_loss_form(j.at("grad_loss_form").get<std::string>());
}

inline void apply_unicycle(const json& j, UnicycleParams& p) {
  const std::string w = "unicycle";
  check_keys(j, w,
             {"side", "hcbf_radius", "lookahead", "k_v", "k_omega", "dt", "target", "start", "start_jitter",
              "eval_offsets"});
  get(j, "side", w, p.side);
  get(j, "hcbf_radius", w, p.hcbf_radius);
  get(j, "lookahead", w, p.lookahead);
  get(j, "k_v", w, p.k_v);
  get(j, "k_omega", w, p.k_omega);
  get(j, "dt", w, p.dt);
  get_vec2(j, "target", w, p.target);
  get(j, "start_jitter", w, p.start_jitter);
  get(j, "eval_offsets", w, p.eval_offsets);
  if (j.contains("start")) {
    const auto& s = j.at("start");
    if (!s.is_array() || s.size() != 3) throw ConfigError("unicycle.start must be [x, y, phi]");
    p.start = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
  }
}

inline void apply_arm(const json& j, ArmParams& p) {
  const std::string w = "arm";
  check_keys(j, w,
             {"l1", "l2", "m1", "m2", "gravity", "dt", "k_p", "k_d", "target", "start_q", "start_jitter", "eval_q",
              "beta", "normal", "hcbf_gamma", "wall_y", "link_width"});
  get(j, "l1", w, p.l1);
  get(j, "l2", w, p.l2);
  get(j, "m1", w, p.m1);
  get(j, "m2", w, p.m2);
  get(j, "gravity", w, p.gravity);
  get(j, "dt", w, p.dt);
  get(j, "k_p", w, p.k_p);
  get(j, "k_d", w, p.k_d);
  get_vec2(j, "target", w, p.target);
  get_vec2(j, "start_q", w, p.start_q);
  get(j, "start_jitter", w, p.start_jitter);
  get(j, "beta", w, p.beta);
  get_vec2(j, "normal", w, p.normal);
  get(j, "hcbf_gamma", w, p.hcbf_gamma);
  get(j, "wall_y", w, p.wall_y);
  get(j, "link_width", w, p.link_width);
  if (j.contains("eval_q")) {
    const auto& e = j.at("eval_q");
    if (!e.is_array()) throw ConfigError("arm.eval_q must be an array of [q1, q2] pairs");
    p.eval_q.clear();
    for (const auto& q : e) p.eval_q.push_back(to_vec2(q, "arm.eval_q entry"));
  }
}

}  // namespace detail

/**
 * Builds a RunConfig from a parsed document. `env_override` (the --env flag)
 * takes precedence over the document's "env" key; the environment's defaults
 * are applied before any block so the file only needs the values it changes.
 * Unknown keys are errors. The result is not yet validated.
 */
inline RunConfig from_json(const json& doc, std::optional<EnvKind> env_override = std::nullopt) {
  detail::check_keys(doc, "config", {"env", "train", "unicycle", "arm", "out", "seeds", "traj_every", "dump_buffers"});
  EnvKind env = EnvKind::Unicycle;
  if (doc.contains("env")) env = parse_env(doc.at("env").get<std::string>());
  if (env_override) env = *env_override;
  RunConfig c = defaults_for(env);
  if (doc.contains("train")) detail::apply_train(doc.at("train"), c.train);
  if (doc.contains("unicycle")) detail::apply_unicycle(doc.at("unicycle"), c.unicycle);
  if (doc.contains("arm")) detail::apply_arm(doc.at("arm"), c.arm);
  detail::get(doc, "out", "config", c.out);
  detail::get(doc, "seeds", "config", c.seeds);
  detail::get(doc, "traj_every", "config", c.traj_every);
  detail::get(doc, "dump_buffers", "config", c.dump_buffers);
  return c;
}

inline RunConfig load_run_config(const std::string& path, std::optional<EnvKind> env_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc, env_override);
}

/// Full document for a config, every field spelled out. Round-trips through
/// from_json.
inline json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  json eval_q = json::array();
  for (const auto& q : c.arm.eval_q) eval_q.push_back(detail::vec2_json(q));
  return json{
      {"env", to_string(c.env)},
      {"out", c.out},
      {"seeds", c.seeds},
      {"traj_every", c.traj_every},
      {"dump_buffers", c.dump_buffers},
      {"train",
       {{"lambda", t.lambda},
        {"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"updates_per_epoch", t.updates_per_epoch},
        {"horizon", t.horizon},
        {"epochs", t.epochs},
        {"alpha_p", t.alpha_p},
        {"priority_epsilon", t.priority_epsilon},
        {"class_k_gain", t.class_k_gain},
        {"seed", t.seed},
        {"sampler", to_string(t.sampler)},
        {"unsafe_margin", t.unsafe_margin},
        {"grad_loss_form", to_string(t.grad_loss_form)},
        {"hidden", t.hidden},
        {"init_scale", t.init_scale},
        {"buffer_capacity", t.buffer_capacity}}},
      {"unicycle",
       {{"side", c.unicycle.side},
        {"hcbf_radius", c.unicycle.hcbf_radius},
        {"lookahead", c.unicycle.lookahead},
        {"k_v", c.unicycle.k_v},
        {"k_omega", c.unicycle.k_omega},
        {"dt", c.unicycle.dt},
        {"target", detail::vec2_json(c.unicycle.target)},
        {"start", json::array({c.unicycle.start[0], c.unicycle.start[1], c.unicycle.start[2]})},
        {"start_jitter", c.unicycle.start_jitter},
        {"eval_offsets", c.unicycle.eval_offsets}}},
      {"arm",
       {{"l1", c.arm.l1},
        {"l2", c.arm.l2},
        {"m1", c.arm.m1},
        {"m2", c.arm.m2},
        {"gravity", c.arm.gravity},
        {"dt", c.arm.dt},
        {"k_p", c.arm.k_p},
        {"k_d", c.arm.k_d},
        {"target", detail::vec2_json(c.arm.target)},
        {"start_q", detail::vec2_json(c.arm.start_q)},
        {"start_jitter", c.arm.start_jitter},
        {"eval_q", eval_q},
        {"beta", c.arm.beta},
        {"normal", detail::vec2_json(c.arm.normal)},
        {"hcbf_gamma", c.arm.hcbf_gamma},
        {"wall_y", c.arm.wall_y},
        {"link_width", c.arm.link_width}}}};
}

}  // namespace percbf::io
