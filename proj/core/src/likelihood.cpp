// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "binflow/error.hpp"
#include "binflow/losses.hpp"
#include "binflow/quadrature.hpp"

namespace binflow {

namespace {
constexpr double kLogTimeSpan = 30.0;
constexpr double kFirstPanel = 0.02;
constexpr int kPanelPoints = 16;
}  // namespace

std::string_view to_string(NllMode mode) noexcept {
  return mode == NllMode::MonteCarlo ? "monte_carlo" : "quadrature";
}

NllMode nll_mode_from_string(std::string_view name) {
  if (name == "monte_carlo") return NllMode::MonteCarlo;
  if (name == "quadrature") return NllMode::Quadrature;
  throw ParameterError("unknown likelihood mode '" + std::string(name) + "'");
}

double nll_integrand(const RateModel& rates, std::span<const std::int64_t> x, double t,
                     std::span<const std::int64_t> y, std::uint64_t* floor_events) {
  const double T = rates.final_time();
  if (x.size() != y.size() || x.size() != rates.dim())
    throw ParameterError("nll_integrand: dimension mismatch");
  if (!(t >= 0.0 && t < T)) throw RangeError("nll_integrand: t must be in [0, T)");
  std::vector<double> lam(y.size());
  rates.rate(t, y, lam);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > x[i] || y[i] < 0) throw ParameterError("nll_integrand: need 0 <= y <= x");
    double b = lam[i];
    if (!(b >= kRateFloor)) {
      b = kRateFloor;
      if (floor_events) ++*floor_events;
    }
    s += bregman_entropic_term(static_cast<double>(x[i] - y[i]) / (T - t), b);
  }
  return s;
}

NllTimeRule nll_time_rule(double final_time, int n_nodes) {
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
  if (n_nodes < 1) throw ParameterError("n_nodes must be >= 1");
  const int panels = (n_nodes + kPanelPoints - 1) / kPanelPoints;
  std::vector<double> edges{0.0};
  if (panels == 1) {
    edges.push_back(kLogTimeSpan);
  } else {
    const double r = std::log(kLogTimeSpan / kFirstPanel) / (panels - 1);
    for (int k = 0; k < panels; ++k) edges.push_back(kFirstPanel * std::exp(r * k));
    edges.back() = kLogTimeSpan;
  }
  const QuadratureRule v = composite_gauss_legendre(edges, kPanelPoints);
  NllTimeRule rule;
  rule.t.resize(v.nodes.size());
  rule.w.resize(v.nodes.size());
  for (std::size_t j = 0; j < v.nodes.size(); ++j) {
    const double e = std::exp(-v.nodes[j]);
    rule.t[j] = final_time * (1.0 - e);
    rule.w[j] = v.weights[j] * final_time * e;
  }
  return rule;
}

NllQuadrature::NllQuadrature(const RateModel& rates, int n_nodes)
    : rates_(rates), rule_(nll_time_rule(rates.final_time(), n_nodes)) {
  if (rates.dim() != 1) throw ParameterError("quadrature likelihood requires dim = 1");
  rate_.resize(rule_.t.size());
}

void NllQuadrature::extend(std::int64_t x) {
  if (x <= cached_max_) return;
  const std::int64_t lo = cached_max_ + 1;
  std::vector<std::int64_t> ys;
  for (std::int64_t y = lo; y <= x; ++y) ys.push_back(y);
  std::vector<double> out(ys.size());
  for (std::size_t j = 0; j < rule_.t.size(); ++j) {
    rates_.rate(rule_.t[j], ys, out);
    rate_[j].insert(rate_[j].end(), out.begin(), out.end());
  }
  cached_max_ = x;
}

NllEstimate NllQuadrature::operator()(std::int64_t x) {
  if (x < 0) throw RangeError("nll_quadrature: x must be >= 0");
  extend(x);
  const double T = rates_.final_time();
  double total = 0.0;
  for (std::size_t j = 0; j < rule_.t.size(); ++j) {
    const double t = rule_.t[j];
    const double s = t / T;
    double g = 0.0;
    for (std::int64_t y = 0; y <= x; ++y) {
      const double lw = log_binomial_pmf(x, s, y);
      if (lw < -745.0) continue;
      double b = rate_[j][static_cast<std::size_t>(y)];
      if (!(b >= kRateFloor)) {
        b = kRateFloor;
        ++floor_events_;
      }
      g += std::exp(lw) * bregman_entropic_term(static_cast<double>(x - y) / (T - t), b);
    }
    total += rule_.w[j] * g;
  }
  NllEstimate e;
  e.value = total;
  e.std_error = 0.0;
  e.n_time = static_cast<int>(rule_.t.size());
  e.n_inner = static_cast<int>(x + 1);
  e.mode = NllMode::Quadrature;
  return e;
}

NllEstimate nll_quadrature(const FlowTables& tables, std::int64_t x, int n_nodes) {
  if (x < 0 || x > tables.support_cap())
    throw RangeError("nll_quadrature: x=" + std::to_string(x) + " outside support {0.." +
                     std::to_string(tables.support_cap()) + "}");
  const IntensityRate rates(tables);
  NllQuadrature q(rates, n_nodes);
  return q(x);
}

NllEstimate nll_monte_carlo(const RateModel& rates, std::span<const std::int64_t> x, int n_time,
                            int n_inner, Rng& rng) {
  if (n_time < 1 || n_inner < 1) throw ParameterError("n_time and n_inner must be >= 1");
  const double T = rates.final_time();
  std::uniform_real_distribution<double> unif(0.0, T);
  std::vector<std::int64_t> y(x.size());
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n_time; ++i) {
    const double t = unif(rng);
    double inner = 0.0;
    for (int j = 0; j < n_inner; ++j) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        std::binomial_distribution<std::int64_t> thin(x[k], t / T);
        y[k] = thin(rng);
      }
      inner += T * nll_integrand(rates, x, t, y);
    }
    inner /= n_inner;
    sum += inner;
    sum2 += inner * inner;
  }
  NllEstimate e;
  e.value = sum / n_time;
  e.std_error = n_time > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * e.value) / (n_time - 1)) /
                                       n_time)
                           : 0.0;
  e.n_time = n_time;
  e.n_inner = n_inner;
  e.mode = NllMode::MonteCarlo;
  return e;
}

NllSummary summarize_nll(std::span<const double> values) {
  NllSummary s;
  s.n = values.size();
  if (s.n == 0) throw ParameterError("summarize_nll: no values");
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  }
  return s;
}

void write_nll_csv(std::ostream& out, std::span<const std::int64_t> x,
                   std::span<const NllEstimate> est) {
  out << "x,nll,std_error,mode\n";
  out.precision(17);
  for (std::size_t i = 0; i < x.size(); ++i)
    out << x[i] << ',' << est[i].value << ',' << est[i].std_error << ',' << to_string(est[i].mode)
        << '\n';
}

}  // namespace binflow
