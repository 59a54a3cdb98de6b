// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "binflow/checkpoint.hpp"
#include "binflow/denoiser.hpp"
#include "binflow/diagnostics.hpp"
#include "binflow/error.hpp"
#include "binflow/likelihood.hpp"
#include "binflow/poisson_calculus.hpp"
#include "binflow/rng.hpp"
#include "binflow/sampler.hpp"
#include "binflow/train.hpp"
#include "config.hpp"

namespace binflow::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kModelFile = "model.bnfw";

struct Run {
  ExperimentConfig cfg;
  std::string digest;
  fs::path dir;
  bool oracle = false;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  return json::parse(in);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Wall-clock times live only in this sidecar so every other artifact is reproducible.
void stamp(const Run& run, const std::string& command) {
  const fs::path p = run.dir / "timestamps.json";
  json j = json::object();
  if (fs::exists(p)) {
    try {
      j = read_json(p);
    } catch (const json::exception&) {
      j = json::object();
    }
  }
  j[command] = utc_now();
  write_json(p, j);
}

Run open_run(const Options& opts, const std::string& command) {
  if (opts.oracle && !opts.checkpoint.empty())
    throw ConfigError("--checkpoint", "cannot be combined with --oracle");
  if (opts.config.empty()) throw ConfigError("--config", "required for '" + command + "'");
  Run run;
  run.cfg = load_config(opts.config);
  if (opts.seed) run.cfg.set_seed(*opts.seed);
  run.digest = config_digest(run.cfg);
  const std::string base = opts.out.empty() ? run.cfg.io.output_dir : opts.out;
  run.dir = run_directory(base, run.digest, run.cfg.seed);
  if (opts.oracle) run.dir += "-oracle";
  run.oracle = opts.oracle;
  fs::create_directories(run.dir);
  json cfg = resolved_json(run.cfg);
  cfg["config_digest"] = run.digest;
  cfg["binflow_version"] = BINFLOW_VERSION;
  cfg["source"] = run.oracle ? "oracle" : "checkpoint";
  write_json(run.dir / "config.json", cfg);
  return run;
}

json meta(const Run& run, const std::string& command) {
  return {{"binflow_version", BINFLOW_VERSION},
          {"command", command},
          {"config_digest", run.digest},
          {"seed", run.cfg.seed},
          {"target", run.cfg.target.label()},
          {"source", run.oracle ? "oracle" : "checkpoint"}};
}

MlpDenoiser load_checked(const Run& run, const std::string& path) {
  MlpDenoiser m = load_model(path, run.cfg.dim);
  if (std::abs(m.final_time() - run.cfg.final_time) > 1e-12)
    throw CheckpointError("checkpoint final time " + std::to_string(m.final_time()) +
                          " does not match config final_time " +
                          std::to_string(run.cfg.final_time));
  return m;
}

// Source of the flow: exact tables (--oracle) or a trained checkpoint.
struct Source {
  std::string kind;  // "oracle" or "checkpoint"
  std::string path;
  std::optional<MlpDenoiser> model;
};

Source resolve_source(const Options& opts, const Run& run) {
  Source s;
  if (opts.oracle) {
    s.kind = "oracle";
    return s;
  }
  s.kind = "checkpoint";
  s.path = opts.checkpoint;
  if (s.path.empty()) {
    const fs::path own = run.dir / kModelFile;
    if (!fs::exists(own))
      throw ConfigError("--checkpoint", "no model found; pass --checkpoint <path> or --oracle");
    s.path = own.string();
  }
  s.model = load_checked(run, s.path);
  return s;
}

json source_json(const Source& s) {
  json j{{"kind", s.kind}};
  if (!s.path.empty()) j["checkpoint"] = s.path;
  if (s.model) j["checkpoint_digest"] = s.model->config_digest();
  return j;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_count(const std::string& s, std::int64_t& v) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size() && v >= 0;
}

struct Stats {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

Stats mean_se(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string run_directory(const std::string& base, const std::string& digest, std::uint64_t seed) {
  return (fs::path(base) / (digest + "-s" + std::to_string(seed))).string();
}

std::vector<std::int64_t> read_eval_set(std::istream& in, std::size_t dim,
                                        const std::string& source) {
  std::vector<std::int64_t> out;
  std::vector<std::size_t> cols;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    std::int64_t v = 0;
    if (first) {
      first = false;
      if (!parse_count(cells[0], v)) {
        for (std::size_t i = 0; i < dim; ++i) {
          const std::vector<std::string> names =
              dim == 1 ? std::vector<std::string>{"x", "x_final", "x_0"}
                       : std::vector<std::string>{"x_" + std::to_string(i)};
          auto it = std::find_first_of(cells.begin(), cells.end(), names.begin(), names.end());
          if (it == cells.end())
            throw ConfigError("", source + ":" + std::to_string(line_no) +
                                      ": header has no column for coordinate " +
                                      std::to_string(i));
          cols.push_back(static_cast<std::size_t>(it - cells.begin()));
        }
        continue;
      }
    }
    if (cols.empty()) {
      if (cells.size() != dim)
        throw ConfigError("", source + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(dim) + " fields, found " +
                                  std::to_string(cells.size()));
      for (std::size_t i = 0; i < dim; ++i) cols.push_back(i);
    }
    for (const std::size_t c : cols) {
      if (c >= cells.size() || !parse_count(cells[c], v))
        throw ConfigError("", source + ":" + std::to_string(line_no) +
                                  ": expected a non-negative integer in column " +
                                  std::to_string(c + 1));
      out.push_back(v);
    }
  }
  return out;
}

int cmd_train(const Options& opts, std::ostream& log) {
  if (opts.oracle || !opts.checkpoint.empty())
    throw ConfigError("", "train takes neither --oracle nor --checkpoint");
  const Run run = open_run(opts, "train");
  const ExperimentConfig& cfg = run.cfg;
  const TargetPmf pmf = cfg.target.build();
  const auto data = sample_target(pmf, cfg.n_train * cfg.dim, stream_seed(cfg.seed, 4));
  const Moments mom = moments(pmf);
  const DataScaling scaling{mom.mean, mom.variance > 0.0 ? mom.variance : 1.0, cfg.final_time};
  MlpDenoiser model(cfg.model, scaling, cfg.train.seed);
  model.set_config_digest(run.digest);

  const int every = std::max(1, cfg.train.epochs / 20);
  const TrainResult res = train(model, data, cfg.train, [&](const EpochStats& s) {
    if (s.epoch % every == 0 || s.epoch + 1 == cfg.train.epochs)
      log << "epoch " << s.epoch << " loss " << s.mean_loss << "\n";
  });

  save_model(res.model, (run.dir / kModelFile).string());
  {
    std::ofstream h(run.dir / "history.csv");
    write_history_csv(h, res.history);
  }
  json j = meta(run, "train");
  j["n_train"] = cfg.n_train;
  j["epochs"] = cfg.train.epochs;
  j["num_params"] = cfg.model.num_params();
  j["mu_data"] = scaling.mu_data;
  j["sigma2_data"] = scaling.sigma2_data;
  j["tail_mass"] = pmf.tail_mass();
  j["floor_events"] = res.floor_events;
  if (!res.history.empty()) j["final_loss"] = res.history.back().mean_loss;
  if (cfg.dim == 1) j["irreducible_loss"] = irreducible_loss(pmf, cfg.train, 100000, cfg.seed);
  write_json(run.dir / "train.json", j);
  stamp(run, "train");
  log << "wrote " << (run.dir / kModelFile).string() << "\n";
  return kExitOk;
}

int cmd_sample(const Options& opts, std::ostream& log) {
  const Run run = open_run(opts, "sample");
  const ExperimentConfig& cfg = run.cfg;
  const TargetPmf pmf = cfg.target.build();
  const Source src = resolve_source(opts, run);
  SamplerConfig sc = cfg.sampler;
  if (cfg.io.trajectory && sc.capture_steps.empty())
    for (int k = 0; k <= sc.n_steps; ++k) sc.capture_steps.push_back(k);

  SampleResult res;
  if (src.model) {
    res = sample_chains(*src.model, sc);
  } else {
    const IntensityRate rates(FlowTables(pmf, cfg.final_time), cfg.dim);
    res = sample_chains(rates, sc);
  }
  {
    std::ofstream out(run.dir / "samples.csv");
    write_samples_csv(out, res);
  }
  if (!sc.capture_steps.empty()) {
    std::ofstream out(run.dir / "trajectory.csv");
    write_trajectory_csv(out, res);
  }
  json j = meta(run, "sample");
  j["source"] = source_json(src);
  j["summary"] = sample_summary(res);
  j["time_grid"] = std::string(to_string(sc.time_grid));
  j["tail_mass"] = pmf.tail_mass();
  if (cfg.dim == 1 && res.n_chains > 0) j["w1"] = w1_empirical(res.final_states, pmf);
  write_json(run.dir / "sample_summary.json", j);
  stamp(run, "sample");
  log << "wrote " << res.n_chains << " samples to " << (run.dir / "samples.csv").string() << "\n";
  return kExitOk;
}

int cmd_nll(const Options& opts, std::ostream& log) {
  const Run run = open_run(opts, "nll");
  const ExperimentConfig& cfg = run.cfg;
  const LikelihoodBlock& lc = cfg.likelihood;
  if (lc.mode == NllMode::Quadrature && cfg.dim != 1)
    throw ConfigError("likelihood.mode", "quadrature needs dim = 1; use monte_carlo");
  const TargetPmf pmf = cfg.target.build();
  const Source src = resolve_source(opts, run);

  std::vector<std::int64_t> xs;
  if (lc.eval_set.empty()) {
    xs = sample_target(pmf, lc.n_samples * cfg.dim, stream_seed(cfg.seed, 5));
  } else {
    std::ifstream in(lc.eval_set);
    if (!in) throw ConfigError("likelihood.eval_set", "cannot open '" + lc.eval_set + "'");
    xs = read_eval_set(in, cfg.dim, lc.eval_set);
  }
  if (xs.empty()) throw ConfigError("likelihood", "evaluation set is empty");

  std::unique_ptr<RateModel> rates;
  if (src.model)
    rates = std::make_unique<DenoiserRate>(*src.model, -std::numeric_limits<double>::infinity());
  else
    rates = std::make_unique<IntensityRate>(FlowTables(pmf, cfg.final_time), cfg.dim);

  const std::size_t n = xs.size() / cfg.dim;
  std::vector<NllEstimate> est;
  est.reserve(n);
  std::uint64_t floors = 0;
  if (lc.mode == NllMode::Quadrature) {
    NllQuadrature quad(*rates, lc.n_nodes);
    std::map<std::int64_t, NllEstimate> memo;
    for (const auto x : xs) {
      auto it = memo.find(x);
      if (it == memo.end()) it = memo.emplace(x, quad(x)).first;
      est.push_back(it->second);
    }
    floors = quad.floor_events();
  } else {
    Rng rng(stream_seed(cfg.seed, 6));
    for (std::size_t i = 0; i < n; ++i)
      est.push_back(nll_monte_carlo(*rates, std::span(xs).subspan(i * cfg.dim, cfg.dim),
                                    lc.n_time, lc.n_inner, rng));
  }

  std::vector<double> values;
  values.reserve(n);
  for (const auto& e : est) values.push_back(e.value);
  const NllSummary sm = summarize_nll(values);
  {
    std::ofstream out(run.dir / "nll.csv");
    if (cfg.dim == 1) {
      write_nll_csv(out, xs, est);
    } else {
      out << "row,nll,std_error,mode\n" << std::setprecision(17);
      for (std::size_t i = 0; i < n; ++i)
        out << i << "," << est[i].value << "," << est[i].std_error << ","
            << to_string(est[i].mode) << "\n";
    }
  }
  json j = meta(run, "nll");
  j["source"] = source_json(src);
  j["mode"] = std::string(to_string(lc.mode));
  j["mean"] = sm.mean;
  j["std_error"] = sm.std_error;
  j["n"] = sm.n;
  j["floor_events"] = floors;
  j["tail_mass"] = pmf.tail_mass();
  j["eval_set"] = lc.eval_set.empty() ? json("sampled") : json(lc.eval_set);
  write_json(run.dir / "nll_summary.json", j);
  stamp(run, "nll");
  log << "nll " << sm.mean << " +- " << sm.std_error << " over " << sm.n << " samples\n";
  return kExitOk;
}

int cmd_validate(const Options& opts, std::ostream& log) {
  const Run run = open_run(opts, "validate");
  const ExperimentConfig& cfg = run.cfg;
  const TargetPmf pmf = cfg.target.build();
  const Source src = resolve_source(opts, run);
  std::optional<OracleDenoiser> oracle;
  const Denoiser* den = nullptr;
  if (src.model) {
    den = &*src.model;
  } else {
    oracle.emplace(pmf, cfg.final_time, cfg.dim);
    den = &*oracle;
  }
  DiagnosticsReport rep = run_suite(pmf, *den, cfg.diagnostics);
  rep.target = cfg.target.label();
  json j = to_json(rep);
  j["metadata"] = meta(run, "validate");
  j["metadata"]["source"] = source_json(src);
  j["metadata"]["tail_mass"] = pmf.tail_mass();
  write_json(run.dir / "report.json", j);
  {
    std::ofstream out(run.dir / "metrics.csv");
    out << "check,value,threshold,pass\n" << std::setprecision(10);
    for (const auto& c : rep.checks) {
      out << c.name << "," << c.value << ",";
      if (c.threshold) out << *c.threshold;
      out << "," << (c.pass ? "true" : "false") << "\n";
    }
  }
  stamp(run, "validate");
  for (const auto& c : rep.checks) {
    log << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value;
    if (c.threshold) log << (c.at_least ? " min=" : " max=") << *c.threshold;
    if (!c.error.empty()) log << " error: " << c.error;
    log << "\n";
  }
  return rep.all_pass() ? kExitOk : kExitValidation;
}

int cmd_report(const Options& opts, std::ostream& log) {
  std::string base = opts.out;
  if (base.empty() && !opts.config.empty()) base = load_config(opts.config).io.output_dir;
  if (base.empty()) base = "runs";
  const fs::path dir(base);
  if (!fs::is_directory(dir)) throw ConfigError("--out", "'" + base + "' is not a directory");

  std::vector<fs::path> runs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "config.json")) runs.push_back(e.path());
  std::sort(runs.begin(), runs.end());

  std::map<std::string, std::vector<double>> nll, w1;
  std::map<std::string, std::size_t> n_runs;
  std::vector<std::string> missing;
  for (const auto& r : runs) {
    std::string target = "unknown";
    try {
      const json cfg = read_json(r / "config.json");
      const json& t = cfg.at("target");
      target = t.contains("name") ? t["name"].get<std::string>() : t["family"].get<std::string>();
      if (cfg.value("source", "") == "oracle") target += " (oracle)";
    } catch (const std::exception& e) {
      missing.push_back(r.filename().string() + ": unreadable config.json");
      continue;
    }
    ++n_runs[target];
    bool any = false;
    if (fs::exists(r / "nll_summary.json")) {
      nll[target].push_back(read_json(r / "nll_summary.json").at("mean").get<double>());
      any = true;
    }
    if (fs::exists(r / "sample_summary.json")) {
      const json s = read_json(r / "sample_summary.json");
      if (s.contains("w1")) {
        w1[target].push_back(s["w1"].get<double>());
        any = true;
      }
    }
    if (fs::exists(r / "report.json")) {
      const json rep = read_json(r / "report.json");
      for (const auto& c : rep.at("checks")) {
        if (c.at("name") == "nll_mean" && !fs::exists(r / "nll_summary.json"))
          nll[target].push_back(c.at("value").get<double>()), any = true;
        if (c.at("name") == "w1" && !fs::exists(r / "sample_summary.json"))
          w1[target].push_back(c.at("value").get<double>()), any = true;
      }
    }
    if (!any)
      missing.push_back(r.filename().string() +
                        ": no nll_summary.json, sample_summary.json or report.json");
  }

  std::ostringstream md;
  md << "# binflow report\n\n";
  if (runs.empty()) {
    md << "## No runs found\n\nNo run directories with config.json under `" << base << "`.\n";
  } else {
    auto table = [&](const std::string& title, const std::map<std::string, std::vector<double>>& m,
                     const std::string& csv_name) {
      md << "## " << title << "\n\n| Target | " << title << " | runs |\n|---|---|---|\n";
      std::ostringstream csv;
      csv << "target,n_runs,mean,std_error\n" << std::setprecision(10);
      for (const auto& [target, vals] : m) {
        const Stats s = mean_se(vals);
        md << "| " << target << " | " << fmt(s.mean) << " ± " << fmt(s.se, 2) << " | " << s.n
           << (s.n < 5 ? " (fewer than 5)" : "") << " |\n";
        csv << target << "," << s.n << "," << s.mean << "," << s.se << "\n";
      }
      if (m.empty()) md << "| (none) | | |\n";
      md << "\n";
      write_file(dir / csv_name, csv.str());
    };
    md << "Runs: " << runs.size() << "\n\n";
    table("NLL", nll, "nll_table.csv");
    table("W1", w1, "w1_table.csv");
  }
  if (!missing.empty()) {
    md << "## Missing artifacts\n\n";
    for (const auto& m : missing) md << "- " << m << "\n";
  }
  write_file(dir / "report.md", md.str());
  log << md.str();
  return kExitOk;
}

int run_command(const std::string& name, const Options& opts, std::ostream& log) {
  try {
    if (name == "train") return cmd_train(opts, log);
    if (name == "sample") return cmd_sample(opts, log);
    if (name == "nll") return cmd_nll(opts, log);
    if (name == "validate") return cmd_validate(opts, log);
    if (name == "report") return cmd_report(opts, log);
    log << "error: unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TruncationError& e) {
    log << "config error: " << e.what() << " (required support_cap " << e.required_cap()
        << ")\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace binflow::cli
