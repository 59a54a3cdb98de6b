// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "binflow/error.hpp"
#include "binflow/losses.hpp"
#include "binflow/poisson_calculus.hpp"

namespace binflow {

std::string_view to_string(Scheme scheme) noexcept {
  return scheme == Scheme::Euler ? "euler" : "tau_leap";
}

std::string_view to_string(TimeGrid grid) noexcept {
  return grid == TimeGrid::UniformT ? "uniform_t" : "uniform_sigma";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "tau_leap") return Scheme::TauLeap;
  throw ParameterError("unknown scheme '" + std::string(name) + "'");
}

TimeGrid time_grid_from_string(std::string_view name) {
  if (name == "uniform_t") return TimeGrid::UniformT;
  if (name == "uniform_sigma") return TimeGrid::UniformSigma;
  throw ParameterError("unknown time grid '" + std::string(name) + "'");
}

void SamplerConfig::validate() const {
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
  if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
  if (!(rate_clamp_min >= 0.0)) throw ParameterError("rate_clamp_min must be >= 0");
  if (!(t_end_guard >= 0.0 && t_end_guard < final_time))
    throw ParameterError("t_end_guard must be in [0, T)");
  for (const int k : capture_steps)
    if (k < 0 || k > n_steps)
      throw ParameterError("capture step " + std::to_string(k) + " outside [0, n_steps]");
}

std::vector<double> make_time_grid(const SamplerConfig& cfg) {
  cfg.validate();
  const double T = cfg.final_time;
  const double t_end = T - cfg.t_end_guard;
  const int n = cfg.n_steps;
  std::vector<double> g(static_cast<std::size_t>(n) + 1);
  if (cfg.time_grid == TimeGrid::UniformT) {
    for (int k = 0; k <= n; ++k) g[static_cast<std::size_t>(k)] = t_end * k / n;
  } else {
    const double s0 = sigma_of_t(0.0);
    const double s1 = sigma_of_t(t_end / T);
    for (int k = 0; k <= n; ++k)
      g[static_cast<std::size_t>(k)] = T * t_of_sigma(s0 + (s1 - s0) * k / n);
  }
  g.front() = 0.0;
  g.back() = t_end;
  for (std::size_t k = 1; k < g.size(); ++k)
    if (!(g[k] > g[k - 1])) throw ParameterError("time grid is not strictly increasing");
  return g;
}

namespace {

class ClampedRates {
 public:
  ClampedRates(const RateModel& rates, double clamp) : rates_(rates), clamp_(clamp) {}

  // Rates for every chain coordinate in `x` at time t.
  void eval(double t, std::span<const std::int64_t> x, std::vector<double>& out,
            std::uint64_t& clamp_events) {
    out.resize(x.size());
    if (rates_.dim() == 1 && !x.empty()) {
      const std::int64_t hi = *std::max_element(x.begin(), x.end());
      need_.assign(static_cast<std::size_t>(hi) + 1, 0);
      for (const auto v : x) need_[static_cast<std::size_t>(v)] = 1;
      states_.clear();
      for (std::size_t v = 0; v < need_.size(); ++v)
        if (need_[v]) states_.push_back(static_cast<std::int64_t>(v));
      vals_.resize(states_.size());
      rates_.rate(t, states_, vals_);
      table_.assign(need_.size(), 0.0);
      for (std::size_t j = 0; j < states_.size(); ++j)
        table_[static_cast<std::size_t>(states_[j])] = vals_[j];
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = table_[static_cast<std::size_t>(x[i])];
    } else if (!x.empty()) {
      rates_.rate(t, x, out);
    }
    for (auto& r : out) {
      if (std::isnan(r)) throw NumericError("rate is NaN");
      if (r < clamp_) {
        r = clamp_;
        ++clamp_events;
      }
    }
  }

 private:
  const RateModel& rates_;
  double clamp_;
  std::vector<char> need_;
  std::vector<std::int64_t> states_;
  std::vector<double> vals_;
  std::vector<double> table_;
};

}  // namespace

SampleResult sample_chains(const RateModel& rates, const SamplerConfig& cfg) {
  cfg.validate();
  if (std::abs(rates.final_time() - cfg.final_time) > 1e-12)
    throw ParameterError("rate model and sampler config disagree on T");
  const std::size_t d = rates.dim();
  const std::size_t n = cfg.n_chains;

  SampleResult res;
  res.dim = d;
  res.n_chains = n;
  res.scheme = cfg.scheme;
  res.grid = make_time_grid(cfg);
  res.capture_steps = cfg.capture_steps;
  res.captured.resize(cfg.capture_steps.size());
  res.final_states.assign(n * d, 0);
  res.jump_counts.assign(n, 0);

  std::vector<StreamEngine> engines;
  engines.reserve(n);
  for (std::size_t c = 0; c < n; ++c) engines.emplace_back(stream_seed(cfg.seed, c));

  auto capture = [&](int k) {
    for (std::size_t j = 0; j < cfg.capture_steps.size(); ++j)
      if (cfg.capture_steps[j] == k) res.captured[j] = res.final_states;
  };
  capture(0);

  ClampedRates eval(rates, cfg.rate_clamp_min);
  std::vector<double> r;
  ChainState st;
  st.x.resize(d);
  for (int k = 0; k < cfg.n_steps; ++k) {
    const double t = res.grid[static_cast<std::size_t>(k)];
    const double dt = res.grid[static_cast<std::size_t>(k) + 1] - t;
    try {
      eval.eval(t, res.final_states, r, res.clamp_events);
    } catch (const Error& e) {
      throw Error("rate evaluation failed at step " + std::to_string(k) + " (t=" +
                  std::to_string(t) + ", chains 0.." + std::to_string(n - 1) + "): " + e.what());
    }
    for (std::size_t c = 0; c < n; ++c) {
      st.t = t;
      std::copy_n(res.final_states.begin() + static_cast<std::ptrdiff_t>(c * d), d, st.x.begin());
      st.jump_count = res.jump_counts[c];
      const std::span<const double> rc(r.data() + c * d, d);
      if (cfg.scheme == Scheme::Euler)
        euler_step(st, rc, dt, engines[c]);
      else
        tau_leap_step(st, rc, dt, engines[c]);
      std::copy_n(st.x.begin(), d, res.final_states.begin() + static_cast<std::ptrdiff_t>(c * d));
      res.jump_counts[c] = st.jump_count;
    }
    capture(k + 1);
  }
  return res;
}

SampleResult sample_chains(const Denoiser& denoiser, const SamplerConfig& cfg) {
  const DenoiserRate rates(denoiser, -std::numeric_limits<double>::infinity());
  return sample_chains(static_cast<const RateModel&>(rates), cfg);
}

std::vector<std::vector<double>> scheme_law(const RateModel& rates, const SamplerConfig& cfg,
                                            std::size_t max_state) {
  if (rates.dim() != 1) throw ParameterError("scheme_law requires dim = 1");
  const auto grid = make_time_grid(cfg);
  const std::size_t M = max_state + 1;
  std::vector<double> p(M, 0.0), q(M);
  p[0] = 1.0;
  std::vector<std::int64_t> xs(M);
  for (std::size_t x = 0; x < M; ++x) xs[x] = static_cast<std::int64_t>(x);
  std::vector<double> r(M);
  std::vector<std::vector<double>> out(cfg.capture_steps.size() + 1);
  auto capture = [&](int k) {
    for (std::size_t j = 0; j < cfg.capture_steps.size(); ++j)
      if (cfg.capture_steps[j] == k) out[j] = p;
  };
  capture(0);
  for (int k = 0; k < cfg.n_steps; ++k) {
    const double t = grid[static_cast<std::size_t>(k)];
    const double dt = grid[static_cast<std::size_t>(k) + 1] - t;
    rates.rate(t, xs, r);
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t x = 0; x < M; ++x) {
      if (p[x] == 0.0) continue;
      const double lam = std::max(cfg.rate_clamp_min, r[x]) * dt;
      if (cfg.scheme == Scheme::Euler) {
        const double a = std::min(1.0, std::max(0.0, lam));
        q[x] += p[x] * (1.0 - a);
        if (x + 1 < M) q[x + 1] += p[x] * a;
      } else {
        if (lam <= 0.0) {
          q[x] += p[x];
          continue;
        }
        double w = std::exp(-lam);
        for (std::size_t j = 0; x + j < M; ++j) {
          q[x + j] += p[x] * w;
          w *= lam / static_cast<double>(j + 1);
          if (j > lam && w < 1e-300) break;
        }
      }
    }
    std::swap(p, q);
    capture(k + 1);
  }
  out.back() = p;
  return out;
}

std::vector<double> empirical_pmf(std::span<const std::int64_t> values, std::size_t dim,
                                  std::size_t coord) {
  if (dim == 0 || coord >= dim) throw ParameterError("bad coordinate");
  const std::size_t n = values.size() / dim;
  std::int64_t hi = 0;
  for (std::size_t c = 0; c < n; ++c) hi = std::max(hi, values[c * dim + coord]);
  std::vector<double> p(static_cast<std::size_t>(hi) + 1, 0.0);
  for (std::size_t c = 0; c < n; ++c) p[static_cast<std::size_t>(values[c * dim + coord])] += 1.0;
  if (n > 0)
    for (auto& v : p) v /= static_cast<double>(n);
  return p;
}

void write_samples_csv(std::ostream& out, const SampleResult& res) {
  out << "chain_id";
  if (res.dim == 1) {
    out << ",x_final";
  } else {
    for (std::size_t i = 0; i < res.dim; ++i) out << ",x_" << i;
  }
  out << '\n';
  for (std::size_t c = 0; c < res.n_chains; ++c) {
    out << c;
    for (std::size_t i = 0; i < res.dim; ++i) out << ',' << res.final_states[c * res.dim + i];
    out << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const SampleResult& res) {
  out << "chain_id,step,t";
  if (res.dim == 1) {
    out << ",x";
  } else {
    for (std::size_t i = 0; i < res.dim; ++i) out << ",x_" << i;
  }
  out << '\n';
  out.precision(17);
  for (std::size_t c = 0; c < res.n_chains; ++c)
    for (std::size_t j = 0; j < res.capture_steps.size(); ++j) {
      const int k = res.capture_steps[j];
      out << c << ',' << k << ',' << res.grid[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < res.dim; ++i) out << ',' << res.captured[j][c * res.dim + i];
      out << '\n';
    }
}

nlohmann::json sample_summary(const SampleResult& res) {
  nlohmann::json j;
  j["n_chains"] = res.n_chains;
  j["dim"] = res.dim;
  j["scheme"] = std::string(to_string(res.scheme));
  j["n_steps"] = res.grid.empty() ? 0 : res.grid.size() - 1;
  j["clamp_events"] = res.clamp_events;
  const std::size_t n = res.n_chains;
  nlohmann::json means = nlohmann::json::array(), vars = nlohmann::json::array(),
                 hists = nlohmann::json::array();
  for (std::size_t i = 0; i < res.dim; ++i) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = static_cast<double>(res.final_states[c * res.dim + i]);
      s += v;
      s2 += v * v;
    }
    const double mean = n ? s / static_cast<double>(n) : 0.0;
    const double var = n > 1 ? (s2 - s * mean) / static_cast<double>(n - 1) : 0.0;
    means.push_back(mean);
    vars.push_back(var);
    nlohmann::json h = nlohmann::json::array();
    if (n > 0) {
      const auto pmf = empirical_pmf(res.final_states, res.dim, i);
      for (std::size_t x = 0; x < pmf.size(); ++x)
        h.push_back(static_cast<std::uint64_t>(std::llround(pmf[x] * static_cast<double>(n))));
    }
    hists.push_back(h);
  }
  if (res.dim == 1) {
    j["mean"] = means[0];
    j["variance"] = vars[0];
    j["histogram"] = hists[0];
  } else {
    j["mean"] = means;
    j["variance"] = vars;
    j["histogram"] = hists;
  }
  return j;
}

}  // namespace binflow
