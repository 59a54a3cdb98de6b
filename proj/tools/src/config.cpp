// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "binflow/checkpoint.hpp"
#include "binflow/error.hpp"
#include "binflow/rng.hpp"

namespace binflow::cli {
namespace {

using nlohmann::json;

// Typed access to one JSON object; unknown keys are reported by finish().
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const std::string& path() const noexcept { return path_; }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Block child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Block(j_.contains(key) ? j_.at(key) : empty, at(key));
  }

  double real(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  std::int64_t non_negative(const std::string& key, std::int64_t def) {
    const std::int64_t v = integer(key, def);
    if (v < 0) throw ConfigError(at(key), "must be >= 0");
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(at(key), "expected a non-negative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string())
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  template <class F>
  auto parsed(const std::string& key, F&& f) -> decltype(f(std::string())) {
    try {
      return f(string(key, ""));
    } catch (const ParameterError& e) {
      throw ConfigError(at(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (it.key() != "_notes" && !seen_.count(it.key()))
        throw ConfigError(at(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs a library validate() and rethrows its message under `path`.
template <class F>
void validate_as(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
}

void parse_target(Block b, TargetBlock& t) {
  t.name = b.string("name", "");
  if (!t.name.empty()) {
    try {
      const TargetSpec& s = synthetic_target(t.name);
      t.family = s.family;
      t.params = s.params;
      t.support_cap = s.support_cap;
    } catch (const ParameterError& e) {
      throw ConfigError(b.at("name"), e.what());
    }
  } else if (!b.has("family")) {
    throw ConfigError(b.at("family"), "required when no reference name is given");
  }
  if (b.has("family")) t.family = b.parsed("family", family_from_string);
  t.params = b.reals("params", t.params);
  t.weights = b.reals("weights", {});
  t.support_cap = static_cast<int>(b.non_negative("support_cap", t.support_cap));
  if (b.has("max_tail_mass")) t.max_tail_mass = b.real("max_tail_mass", 0.0);
  b.finish();
  if (t.family == Family::Custom) {
    if (t.weights.empty()) throw ConfigError(b.at("weights"), "custom targets need weights");
  } else if (t.support_cap < 1) {
    throw ConfigError(b.at("support_cap"), "must be >= 1");
  }
  try {
    (void)t.build();
  } catch (const TruncationError& e) {
    throw ConfigError(b.at("support_cap"), e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(b.at("params"), e.what());
  }
}

void parse_model(Block b, MlpArch& a, std::size_t dim) {
  a.dim = dim;
  a.width = static_cast<std::size_t>(b.non_negative("width", static_cast<std::int64_t>(a.width)));
  a.depth = static_cast<std::size_t>(b.non_negative("depth", static_cast<std::int64_t>(a.depth)));
  a.time_dim =
      static_cast<std::size_t>(b.non_negative("time_dim", static_cast<std::int64_t>(a.time_dim)));
  a.precondition = b.boolean("precondition", a.precondition);
  b.finish();
  validate_as(b.at("width"), [&] { a.validate(); });
}

void parse_train(Block b, ExperimentConfig& cfg) {
  TrainConfig& c = cfg.train;
  cfg.n_train = static_cast<std::size_t>(
      b.non_negative("n_samples", static_cast<std::int64_t>(cfg.n_train)));
  c.epochs = static_cast<int>(b.non_negative("epochs", c.epochs));
  c.batch_size = static_cast<int>(b.integer("batch_size", c.batch_size));
  c.learning_rate = b.real("learning_rate", c.learning_rate);
  c.weight_decay = b.real("weight_decay", c.weight_decay);
  c.grad_clip_norm = b.real("grad_clip_norm", c.grad_clip_norm);
  c.ema_decay = b.real("ema_decay", c.ema_decay);
  c.adam_beta1 = b.real("adam_beta1", c.adam_beta1);
  c.adam_beta2 = b.real("adam_beta2", c.adam_beta2);
  c.adam_eps = b.real("adam_eps", c.adam_eps);
  if (b.has("loss")) c.loss = b.parsed("loss", loss_kind_from_string);
  if (b.has("weight_fn")) c.weight_fn = b.parsed("weight_fn", weight_kind_from_string);
  Block ns = b.child("noise_schedule");
  if (ns.has("mode")) c.noise_schedule.mode = ns.parsed("mode", noise_mode_from_string);
  c.noise_schedule.mu_sigma = ns.real("mu_sigma", c.noise_schedule.mu_sigma);
  c.noise_schedule.gamma_sigma = ns.real("gamma_sigma", c.noise_schedule.gamma_sigma);
  ns.finish();
  b.finish();
  c.final_time = cfg.final_time;
  validate_as(b.path(), [&] { c.validate(); });
}

void parse_sampler(Block b, SamplerConfig& s, double final_time) {
  s.final_time = final_time;
  s.n_steps = static_cast<int>(b.integer("n_steps", s.n_steps));
  if (b.has("scheme")) s.scheme = b.parsed("scheme", scheme_from_string);
  if (b.has("time_grid")) s.time_grid = b.parsed("time_grid", time_grid_from_string);
  s.rate_clamp_min = b.real("rate_clamp_min", s.rate_clamp_min);
  s.t_end_guard = b.real("t_end_guard", s.t_end_guard);
  s.n_chains = static_cast<std::size_t>(
      b.non_negative("n_chains", static_cast<std::int64_t>(s.n_chains)));
  if (b.has("capture_steps")) {
    const json& v = b.raw("capture_steps");
    if (!v.is_array()) throw ConfigError(b.at("capture_steps"), "expected an array of integers");
    s.capture_steps.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer())
        throw ConfigError(b.at("capture_steps") + "[" + std::to_string(i) + "]",
                          "expected an integer");
      s.capture_steps.push_back(v[i].get<int>());
    }
  }
  b.finish();
  validate_as(b.path(), [&] { s.validate(); });
}

void parse_likelihood(Block b, LikelihoodBlock& l) {
  if (b.has("mode")) l.mode = b.parsed("mode", nll_mode_from_string);
  l.n_nodes = static_cast<int>(b.integer("n_nodes", l.n_nodes));
  l.n_time = static_cast<int>(b.integer("n_time", l.n_time));
  l.n_inner = static_cast<int>(b.integer("n_inner", l.n_inner));
  l.n_samples = static_cast<std::size_t>(
      b.non_negative("n_samples", static_cast<std::int64_t>(l.n_samples)));
  l.eval_set = b.string("eval_set", l.eval_set);
  b.finish();
  if (l.n_nodes < 16) throw ConfigError(b.at("n_nodes"), "must be >= 16");
  if (l.n_time < 2) throw ConfigError(b.at("n_time"), "must be >= 2");
  if (l.n_inner < 1) throw ConfigError(b.at("n_inner"), "must be >= 1");
}

bool known_check(const std::string& name) {
  const auto& k = known_checks();
  return std::find(k.begin(), k.end(), name) != k.end();
}

void parse_diagnostics(Block b, DiagnosticsConfig& d, const ExperimentConfig& cfg) {
  d.enabled_checks = b.strings("checks", {});
  for (std::size_t i = 0; i < d.enabled_checks.size(); ++i)
    if (!known_check(d.enabled_checks[i]))
      throw ConfigError(b.at("checks") + "[" + std::to_string(i) + "]",
                        "unknown check '" + d.enabled_checks[i] + "'");
  if (b.has("thresholds")) {
    const json& th = b.raw("thresholds");
    if (!th.is_object()) throw ConfigError(b.at("thresholds"), "expected an object");
    for (auto it = th.begin(); it != th.end(); ++it) {
      const std::string path = b.at("thresholds") + "." + it.key();
      if (it.key() == "_notes") continue;
      if (!known_check(it.key())) throw ConfigError(path, "unknown check");
      if (!it->is_number()) throw ConfigError(path, "expected a number");
      d.thresholds[it.key()] = it->get<double>();
    }
  }
  d.t_grid = b.reals("t_grid", d.t_grid);
  for (std::size_t i = 0; i < d.t_grid.size(); ++i)
    if (!(d.t_grid[i] > 0.0 && d.t_grid[i] < 1.0))
      throw ConfigError(b.at("t_grid") + "[" + std::to_string(i) + "]", "must be in (0, 1)");
  d.mass_floor = b.real("mass_floor", d.mass_floor);
  d.nll_nodes = static_cast<int>(b.integer("nll_nodes", d.nll_nodes));
  d.kl_nodes = static_cast<int>(b.integer("kl_nodes", d.kl_nodes));
  d.kfe_t = b.real("kfe_t", d.kfe_t);
  d.kfe_dts = b.reals("kfe_dts", d.kfe_dts);
  d.nll_samples = static_cast<std::size_t>(
      b.non_negative("nll_samples", static_cast<std::int64_t>(d.nll_samples)));
  b.finish();
  if (d.kfe_dts.size() < 2) throw ConfigError(b.at("kfe_dts"), "needs at least two step sizes");
  d.final_time = cfg.final_time;
  d.sampler = cfg.sampler;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string TargetBlock::label() const { return name.empty() ? std::string(to_string(family)) : name; }

TargetPmf TargetBlock::build() const {
  if (family == Family::Custom) return make_custom_target(weights);
  return make_target(family, params, support_cap, max_tail_mass);
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = stream_seed(s, 1);
  sampler.seed = stream_seed(s, 2);
  diagnostics.seed = stream_seed(s, 3);
  diagnostics.sampler.seed = sampler.seed;
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  Block root(doc, "");
  cfg.seed = root.unsigned_integer("seed", 0);
  cfg.final_time = root.real("final_time", 1.0);
  if (!(cfg.final_time > 0.0)) throw ConfigError("final_time", "must be > 0");
  cfg.dim = static_cast<std::size_t>(root.integer("dim", 1));
  if (cfg.dim < 1) throw ConfigError("dim", "must be >= 1");
  if (!root.has("target")) throw ConfigError("target", "required");
  parse_target(root.child("target"), cfg.target);
  parse_model(root.child("model"), cfg.model, cfg.dim);
  parse_train(root.child("train"), cfg);
  parse_sampler(root.child("sampler"), cfg.sampler, cfg.final_time);
  parse_likelihood(root.child("likelihood"), cfg.likelihood);
  parse_diagnostics(root.child("diagnostics"), cfg.diagnostics, cfg);
  Block io = root.child("io");
  cfg.io.output_dir = io.string("output_dir", cfg.io.output_dir);
  cfg.io.trajectory = io.boolean("trajectory", cfg.io.trajectory);
  io.finish();
  root.finish();
  cfg.set_seed(cfg.seed);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json resolved_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["final_time"] = c.final_time;
  j["dim"] = c.dim;
  json t;
  if (!c.target.name.empty()) t["name"] = c.target.name;
  t["family"] = std::string(to_string(c.target.family));
  t["params"] = c.target.params;
  if (!c.target.weights.empty()) t["weights"] = c.target.weights;
  t["support_cap"] = c.target.support_cap;
  if (c.target.max_tail_mass) t["max_tail_mass"] = *c.target.max_tail_mass;
  j["target"] = t;
  j["model"] = {{"width", c.model.width},
                {"depth", c.model.depth},
                {"time_dim", c.model.time_dim},
                {"precondition", c.model.precondition}};
  const TrainConfig& tr = c.train;
  j["train"] = {{"n_samples", c.n_train},
                {"epochs", tr.epochs},
                {"batch_size", tr.batch_size},
                {"learning_rate", tr.learning_rate},
                {"weight_decay", tr.weight_decay},
                {"grad_clip_norm", tr.grad_clip_norm},
                {"ema_decay", tr.ema_decay},
                {"adam_beta1", tr.adam_beta1},
                {"adam_beta2", tr.adam_beta2},
                {"adam_eps", tr.adam_eps},
                {"loss", std::string(to_string(tr.loss))},
                {"weight_fn", std::string(to_string(tr.weight_fn))},
                {"noise_schedule",
                 {{"mode", std::string(to_string(tr.noise_schedule.mode))},
                  {"mu_sigma", tr.noise_schedule.mu_sigma},
                  {"gamma_sigma", tr.noise_schedule.gamma_sigma}}}};
  const SamplerConfig& s = c.sampler;
  j["sampler"] = {{"n_steps", s.n_steps},
                  {"scheme", std::string(to_string(s.scheme))},
                  {"time_grid", std::string(to_string(s.time_grid))},
                  {"rate_clamp_min", s.rate_clamp_min},
                  {"t_end_guard", s.t_end_guard},
                  {"n_chains", s.n_chains},
                  {"capture_steps", s.capture_steps}};
  const LikelihoodBlock& l = c.likelihood;
  j["likelihood"] = {{"mode", std::string(to_string(l.mode))},
                     {"n_nodes", l.n_nodes},
                     {"n_time", l.n_time},
                     {"n_inner", l.n_inner},
                     {"n_samples", l.n_samples},
                     {"eval_set", l.eval_set}};
  const DiagnosticsConfig& d = c.diagnostics;
  j["diagnostics"] = {{"checks", d.enabled_checks},
                      {"thresholds", d.thresholds},
                      {"t_grid", d.t_grid},
                      {"mass_floor", d.mass_floor},
                      {"nll_nodes", d.nll_nodes},
                      {"kl_nodes", d.kl_nodes},
                      {"kfe_t", d.kfe_t},
                      {"kfe_dts", d.kfe_dts},
                      {"nll_samples", d.nll_samples}};
  j["io"] = {{"output_dir", c.io.output_dir}, {"trajectory", c.io.trajectory}};
  return j;
}

std::string config_digest(const ExperimentConfig& cfg) {
  json j = resolved_json(cfg);
  j.erase("seed");
  j.erase("io");
  const std::string text = j.dump();
  return hex16(fnv1a64(text.data(), text.size()));
}

}  // namespace binflow::cli
