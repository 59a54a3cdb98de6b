// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/diagnostics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "binflow/error.hpp"
#include "binflow/likelihood.hpp"
#include "binflow/poisson_calculus.hpp"

namespace binflow {

void CheckResult::decide() {
  if (!error.empty() || !std::isfinite(value)) {
    pass = false;
  } else if (!threshold) {
    pass = true;
  } else {
    pass = at_least ? value >= *threshold : value < *threshold;
  }
}

std::vector<double> default_t_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 19; ++k) g.push_back(k / 20.0);
  return g;
}

namespace {

std::string describe(std::span<const double> grid) {
  std::ostringstream os;
  os.precision(6);
  if (grid.empty()) return "t in {}";
  os << "t in {" << grid.front();
  if (grid.size() > 1) os << ", ..., " << grid.back();
  os << "} (" << grid.size() << " points)";
  return os.str();
}

}  // namespace

CheckResult check_tweedie(const TargetPmf& pmf, double final_time, std::span<const double> t_grid,
                          double mass_floor, const Denoiser* denoiser) {
  const FlowTables tables(pmf, final_time);
  CheckResult r;
  r.name = "tweedie";
  r.grid = describe(t_grid) + ", mass > " + std::to_string(mass_floor);
  std::size_t states = 0;
  for (const double t : t_grid) {
    const auto p = thinned_marginal(pmf, t / final_time);
    const auto lam = intensity_row(tables, t);
    std::vector<std::int64_t> xs;
    for (std::size_t x = 0; x < p.size(); ++x)
      if (p[x] > mass_floor) xs.push_back(static_cast<std::int64_t>(x));
    std::vector<double> m(xs.size());
    if (denoiser) {
      denoiser->denoise(t, xs, m);
    } else {
      for (std::size_t i = 0; i < xs.size(); ++i) m[i] = oracle_denoiser(pmf, final_time, t, xs[i]);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto x = static_cast<std::size_t>(xs[i]);
      const double res = std::abs(m[i] - static_cast<double>(x) - (final_time - t) * lam[x]);
      r.value = std::max(r.value, res);
    }
    states += xs.size();
  }
  r.details["states"] = states;
  return r;
}

CheckResult check_marginal(const TargetPmf& pmf, double final_time,
                           std::span<const double> t_grid) {
  const FlowTables tables(pmf, final_time);
  CheckResult r;
  r.name = "marginal";
  r.grid = describe(t_grid);
  for (const double t : t_grid) {
    const auto a = flow_marginal(tables, t);
    const auto b = thinned_marginal(pmf, t / final_time);
    double l1 = 0.0;
    for (std::size_t x = 0; x < std::max(a.size(), b.size()); ++x)
      l1 += std::abs((x < a.size() ? a[x] : 0.0) - (x < b.size() ? b[x] : 0.0));
    r.value = std::max(r.value, l1);
  }
  return r;
}

CheckResult check_kolmogorov_forward(const TargetPmf& pmf, double final_time, double t,
                                     std::span<const double> dt_list) {
  if (dt_list.size() < 2) throw ParameterError("need at least two step sizes");
  const FlowTables tables(pmf, final_time);
  CheckResult r;
  r.name = "kolmogorov_forward";
  r.at_least = true;
  std::ostringstream g;
  g << "t = " << t << ", dt in {";
  for (std::size_t i = 0; i < dt_list.size(); ++i) g << (i ? ", " : "") << dt_list[i];
  g << "}";
  r.grid = g.str();

  const auto p = thinned_marginal(pmf, t / final_time);
  const auto lam = intensity_row(tables, t);
  std::vector<double> rhs(p.size());
  for (std::size_t x = 0; x < p.size(); ++x)
    rhs[x] = (x > 0 ? lam[x - 1] * p[x - 1] : 0.0) - lam[x] * p[x];

  std::vector<double> residuals;
  for (const double dt : dt_list) {
    if (!(dt > 0.0 && t - dt >= 0.0 && t + dt <= final_time))
      throw ParameterError("step size out of range");
    const auto pp = thinned_marginal(pmf, (t + dt) / final_time);
    const auto pm = thinned_marginal(pmf, (t - dt) / final_time);
    double res = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x)
      res = std::max(res, std::abs((pp[x] - pm[x]) / (2.0 * dt) - rhs[x]));
    residuals.push_back(res);
  }
  double order = std::numeric_limits<double>::infinity();
  nlohmann::json orders = nlohmann::json::array();
  for (std::size_t i = 0; i + 1 < residuals.size(); ++i) {
    const double o = std::log(residuals[i] / residuals[i + 1]) / std::log(dt_list[i] / dt_list[i + 1]);
    orders.push_back(o);
    order = std::min(order, o);
  }
  r.value = order;
  r.details["residuals"] = residuals;
  r.details["orders"] = orders;
  return r;
}

CheckResult check_kl_identity(const TargetPmf& pmf, double final_time, int n_t_nodes) {
  const FlowTables tables(pmf, final_time);
  CheckResult r;
  r.name = "kl_identity";
  const NllTimeRule rule = nll_time_rule(final_time, n_t_nodes);
  r.grid = std::to_string(rule.t.size()) + " log-time nodes";
  double lhs = 0.0;
  for (std::size_t j = 0; j < rule.t.size(); ++j) {
    const auto p = flow_marginal(tables, rule.t[j]);
    const auto lam = intensity_row(tables, rule.t[j]);
    double g = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
      const double l = lam[x];
      g += p[x] * ((l > 0.0 ? l * std::log(l) : 0.0) - l + 1.0);
    }
    lhs += rule.w[j] * g;
  }
  double rhs = 0.0;
  const auto mu = pmf.probs();
  const auto lf = tables.log_f();
  for (std::size_t x = 0; x < mu.size(); ++x)
    if (mu[x] > 0.0) rhs += mu[x] * lf[x];
  r.value = std::abs(lhs - rhs);
  r.details["path_integral"] = lhs;
  r.details["relative_entropy"] = rhs;
  return r;
}

CheckResult check_time_reversal(const TargetPmf& pmf, double final_time,
                                std::span<const double> t_grid, double mass_min) {
  const FlowTables tables(pmf, final_time);
  CheckResult r;
  r.name = "time_reversal";
  r.grid = describe(t_grid) + ", mass > " + std::to_string(mass_min);
  std::size_t pairs = 0;
  for (const double t : t_grid) {
    const double s = final_time - t;
    const auto q = thinned_marginal(pmf, s / final_time);
    const auto lam = intensity_row(tables, s);
    for (std::size_t x = 0; x + 1 < q.size(); ++x) {
      if (!(q[x] > mass_min && q[x + 1] > mass_min)) continue;
      const double lhs = q[x + 1] / q[x];
      const double rhs = s / static_cast<double>(x + 1) * lam[x];
      r.value = std::max(r.value, std::abs(lhs / rhs - 1.0));
      ++pairs;
    }
  }
  r.details["pairs"] = pairs;
  return r;
}

CheckResult check_semigroup_backward(const TargetPmf& pmf, double final_time,
                                     std::span<const double> t_grid, double dt,
                                     double mass_floor) {
  const FlowTables tables(pmf, final_time);
  CheckResult r;
  r.name = "semigroup_backward";
  r.grid = describe(t_grid) + ", dt = " + std::to_string(dt);
  for (const double t : t_grid) {
    if (t - dt < 0.0 || t + dt > final_time) continue;
    const auto p = thinned_marginal(pmf, t / final_time);
    const auto lp = tables.log_h_row(t + dt);
    const auto lm = tables.log_h_row(t - dt);
    const auto lam = intensity_row(tables, t);
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (!(p[x] > mass_floor)) continue;
      const double d = (lp[x] - lm[x]) / (2.0 * dt);
      r.value = std::max(r.value, std::abs(d - (1.0 - lam[x])) / std::max(1.0, std::abs(1.0 - lam[x])));
    }
  }
  return r;
}

CheckResult check_nll_identity(const TargetPmf& pmf, double final_time, int n_nodes,
                               double mass_min) {
  const FlowTables tables(pmf, final_time);
  const IntensityRate rates(tables);
  NllQuadrature quad(rates, n_nodes);
  CheckResult r;
  r.name = "nll_identity";
  const auto mu = pmf.probs();
  std::size_t n = 0;
  std::int64_t worst = -1;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (!(mu[x] >= mass_min)) continue;
    const double v = quad(static_cast<std::int64_t>(x)).value;
    const double res = std::abs(v + std::log(mu[x]));
    if (res > r.value || worst < 0) {
      r.value = std::max(r.value, res);
      worst = static_cast<std::int64_t>(x);
    }
    ++n;
  }
  r.grid = std::to_string(n) + " states with mass >= " + std::to_string(mass_min) + ", " +
           std::to_string(n_nodes) + " nodes";
  r.details["worst_x"] = worst;
  return r;
}

CheckResult check_bridge_chi2(const TargetPmf& pmf, const SamplerConfig& cfg,
                              std::size_t min_hits) {
  const FlowTables tables(pmf, cfg.final_time);
  const IntensityRate rates(tables);
  SamplerConfig sc = cfg;
  const int mid = sc.n_steps / 2;
  sc.capture_steps = {mid};
  const SampleResult res = sample_chains(rates, sc);
  const double alpha = res.grid[static_cast<std::size_t>(mid)] / cfg.final_time;

  std::map<std::int64_t, std::vector<std::int64_t>> groups;
  for (std::size_t c = 0; c < res.n_chains; ++c)
    groups[res.final_states[c]].push_back(res.captured[0][c]);

  CheckResult r;
  r.name = "bridge_chi2";
  r.at_least = true;
  r.grid = std::to_string(res.n_chains) + " chains, t_mid = " +
           std::to_string(res.grid[static_cast<std::size_t>(mid)]);
  nlohmann::json per_k = nlohmann::json::array();
  std::vector<std::pair<std::int64_t, double>> pvals;
  for (const auto& [k, mids] : groups) {
    if (mids.size() < min_hits || k == 0) continue;
    const auto n = static_cast<double>(mids.size());
    std::vector<double> obs(static_cast<std::size_t>(k) + 1, 0.0);
    for (const auto v : mids) obs[static_cast<std::size_t>(v)] += 1.0;
    std::vector<double> expct(obs.size());
    for (std::int64_t j = 0; j <= k; ++j)
      expct[static_cast<std::size_t>(j)] = n * std::exp(log_binomial_pmf(k, alpha, j));
    // pool cells until each expected count is at least 5
    std::vector<double> po, pe;
    double ao = 0.0, ae = 0.0;
    for (std::size_t j = 0; j < obs.size(); ++j) {
      ao += obs[j];
      ae += expct[j];
      if (ae >= 5.0) {
        po.push_back(ao);
        pe.push_back(ae);
        ao = ae = 0.0;
      }
    }
    if (ae > 0.0 || ao > 0.0) {
      if (pe.empty()) {
        po.push_back(ao);
        pe.push_back(ae);
      } else {
        po.back() += ao;
        pe.back() += ae;
      }
    }
    if (pe.size() < 2) continue;
    double stat = 0.0;
    for (std::size_t j = 0; j < pe.size(); ++j) stat += (po[j] - pe[j]) * (po[j] - pe[j]) / pe[j];
    const boost::math::chi_squared dist(static_cast<double>(pe.size() - 1));
    const double pv = boost::math::cdf(boost::math::complement(dist, stat));
    pvals.emplace_back(k, pv);
    per_k.push_back({{"k", k}, {"hits", mids.size()}, {"chi2", stat}, {"p_value", pv}});
  }
  r.value = 1.0;
  for (const auto& [k, pv] : pvals)
    r.value = std::min(r.value, std::min(1.0, pv * static_cast<double>(pvals.size())));
  r.details["tests"] = per_k;
  if (pvals.empty()) r.error = "no terminal value reached " + std::to_string(min_hits) + " hits";
  return r;
}

double w1_pmf(std::span<const double> p, std::span<const double> q) {
  double fp = 0.0, fq = 0.0, s = 0.0;
  const std::size_t n = std::max(p.size(), q.size());
  for (std::size_t k = 0; k < n; ++k) {
    fp += k < p.size() ? p[k] : 0.0;
    fq += k < q.size() ? q[k] : 0.0;
    s += std::abs(fp - fq);
  }
  return s;
}

double w1_empirical(std::span<const std::int64_t> samples, const TargetPmf& pmf) {
  if (samples.empty()) throw ParameterError("w1_empirical: no samples");
  for (const auto v : samples)
    if (v < 0) throw ParameterError("w1_empirical: negative sample");
  const auto emp = empirical_pmf(samples);
  return w1_pmf(emp, pmf.probs());
}

DiagnosticsConfig::DiagnosticsConfig() {
  sampler.n_chains = 10000;
  sampler.n_steps = 1000;
  sampler.scheme = Scheme::Euler;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "tweedie",      "marginal",   "kolmogorov_forward", "kl_identity", "time_reversal",
      "semigroup_backward", "nll_identity", "w1", "nll_mean", "bridge_chi2"};
  return names;
}

const std::vector<std::string>& default_checks() {
  static const std::vector<std::string> names{
      "tweedie",      "marginal",   "kolmogorov_forward", "kl_identity", "time_reversal",
      "semigroup_backward", "nll_identity", "w1", "nll_mean"};
  return names;
}

std::optional<double> default_threshold(const std::string& check, Family family) {
  const bool heavy = family == Family::BNB || family == Family::Zipf || family == Family::YuleSimon;
  if (check == "tweedie") return heavy ? 1e-6 : 1e-8;
  if (check == "marginal") return 1e-10;
  if (check == "kolmogorov_forward") return 1.9;
  if (check == "kl_identity") return 1e-3;
  if (check == "time_reversal") return 1e-9;
  if (check == "semigroup_backward") return 1e-5;
  if (check == "nll_identity") return 1e-3;
  if (check == "bridge_chi2") return 0.01;
  if (check == "w1") {
    switch (family) {
      case Family::Poisson: return 0.15;
      case Family::PoissonMixture: return 3 * 1.52;
      case Family::ZIP: return 3 * 0.09;
      case Family::NBM: return 3 * 1.74;
      case Family::BNB: return 3 * 0.79;
      case Family::Zipf: return 3 * 0.18;
      case Family::YuleSimon: return 3 * 0.11;
      case Family::Custom: return 0.15;
    }
  }
  return std::nullopt;
}

bool DiagnosticsReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* DiagnosticsReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

DiagnosticsReport run_suite(const TargetPmf& pmf, const Denoiser& denoiser,
                            const DiagnosticsConfig& cfg) {
  const auto& names = cfg.enabled_checks.empty() ? default_checks() : cfg.enabled_checks;
  for (const auto& n : names)
    if (std::find(known_checks().begin(), known_checks().end(), n) == known_checks().end())
      throw ParameterError("unknown check '" + n + "'");
  for (const auto& [n, v] : cfg.thresholds)
    if (std::find(known_checks().begin(), known_checks().end(), n) == known_checks().end())
      throw ParameterError("threshold for unknown check '" + n + "'");

  DiagnosticsReport rep;
  rep.target = pmf.label();
  rep.seed = cfg.seed;
  const double T = cfg.final_time;
  SamplerConfig sc = cfg.sampler;
  sc.final_time = T;
  sc.seed = stream_seed(cfg.seed, 1);

  std::vector<std::string> seen;
  for (const auto& name : names) {
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) continue;
    seen.push_back(name);
    CheckResult r;
    r.name = name;
    try {
      if (name == "tweedie") {
        r = check_tweedie(pmf, T, cfg.t_grid, cfg.mass_floor, &denoiser);
      } else if (name == "marginal") {
        r = check_marginal(pmf, T, cfg.t_grid);
      } else if (name == "kolmogorov_forward") {
        r = check_kolmogorov_forward(pmf, T, cfg.kfe_t * T, cfg.kfe_dts);
      } else if (name == "kl_identity") {
        r = check_kl_identity(pmf, T, cfg.kl_nodes);
      } else if (name == "time_reversal") {
        r = check_time_reversal(pmf, T, cfg.t_grid);
      } else if (name == "semigroup_backward") {
        r = check_semigroup_backward(pmf, T, cfg.t_grid);
      } else if (name == "nll_identity") {
        r = check_nll_identity(pmf, T, cfg.nll_nodes);
      } else if (name == "bridge_chi2") {
        SamplerConfig bc = sc;
        bc.scheme = Scheme::TauLeap;
        r = check_bridge_chi2(pmf, bc);
      } else if (name == "w1") {
        const SampleResult s = sample_chains(denoiser, sc);
        r.value = w1_empirical(s.final_states, pmf);
        r.grid = std::to_string(sc.n_chains) + " chains, " + std::to_string(sc.n_steps) + " " +
                 std::string(to_string(sc.scheme)) + " steps";
        r.details["clamp_events"] = s.clamp_events;
      } else if (name == "nll_mean") {
        const DenoiserRate rates(denoiser, -std::numeric_limits<double>::infinity());
        NllQuadrature quad(rates, cfg.nll_nodes);
        const auto xs = sample_target(pmf, cfg.nll_samples, stream_seed(cfg.seed, 2));
        std::vector<double> v;
        v.reserve(xs.size());
        for (const auto x : xs) v.push_back(quad(x).value);
        const NllSummary sm = summarize_nll(v);
        r.value = sm.mean;
        r.details["std_error"] = sm.std_error;
        r.details["n"] = sm.n;
        r.details["floor_events"] = quad.floor_events();
        r.grid = std::to_string(cfg.nll_samples) + " target samples, " +
                 std::to_string(cfg.nll_nodes) + " nodes";
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.name = name;
    r.at_least = name == "kolmogorov_forward" || name == "bridge_chi2";
    const auto it = cfg.thresholds.find(name);
    r.threshold = it != cfg.thresholds.end() ? std::optional<double>(it->second)
                                             : default_threshold(name, pmf.family());
    r.decide();
    rep.checks.push_back(std::move(r));
  }
  return rep;
}

nlohmann::json to_json(const DiagnosticsReport& report) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["threshold_table_version"] = kThresholdTableVersion;
  j["target"] = report.target;
  j["seed"] = report.seed;
  j["all_pass"] = report.all_pass();
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    cj["threshold"] = c.threshold ? nlohmann::json(*c.threshold) : nlohmann::json(nullptr);
    cj["comparison"] = c.at_least ? ">=" : "<";
    cj["pass"] = c.pass;
    cj["grid"] = c.grid;
    if (!c.error.empty()) cj["error"] = c.error;
    cj["details"] = c.details;
    checks.push_back(std::move(cj));
  }
  j["checks"] = checks;
  return j;
}

}  // namespace binflow
