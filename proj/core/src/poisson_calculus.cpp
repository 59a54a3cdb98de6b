// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/poisson_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "binflow/error.hpp"

namespace binflow {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp accumulator.
class LogSum {
 public:
  void add(double v) {
    if (v == kNegInf) return;
    if (v <= max_) {
      sum_ += std::exp(v - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

void check_support(const FlowTables& tables, std::int64_t x, std::int64_t max_x) {
  if (x < 0 || x > max_x)
    throw RangeError("x=" + std::to_string(x) + " outside {0.." + std::to_string(max_x) + "}");
  (void)tables;
}

}  // namespace

double log_poisson_pmf(double t, std::int64_t k) {
  if (k < 0) return kNegInf;
  if (t == 0.0) return k == 0 ? 0.0 : kNegInf;
  const auto kd = static_cast<double>(k);
  return -t + kd * std::log(t) - std::lgamma(kd + 1.0);
}

double poisson_pmf(double t, std::int64_t k) { return std::exp(log_poisson_pmf(t, k)); }

double log_binomial_pmf(std::int64_t n, double alpha, std::int64_t k) {
  if (k < 0 || k > n) return kNegInf;
  if (alpha <= 0.0) return k == 0 ? 0.0 : kNegInf;
  if (alpha >= 1.0) return k == n ? 0.0 : kNegInf;
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
         kd * std::log(alpha) + (nd - kd) * std::log1p(-alpha);
}

double semigroup_apply(std::span<const double> g, double t, std::int64_t x) {
  const auto n = static_cast<std::int64_t>(g.size());
  if (x < 0 || x >= n)
    throw RangeError("semigroup_apply: x=" + std::to_string(x) + " outside the table");
  double s = 0.0;
  for (std::int64_t y = 0; x + y < n; ++y) s += g[static_cast<std::size_t>(x + y)] * poisson_pmf(t, y);
  return s;
}

FlowTables::FlowTables(TargetPmf pmf, double final_time)
    : pmf_(std::move(pmf)), final_time_(final_time) {
  if (!(final_time > 0.0) || !std::isfinite(final_time))
    throw ParameterError("final time T must be > 0");
  const auto n = pmf_.size();
  log_f_.resize(n);
  const double log_floor = std::log(kMassFloor);
  for (std::size_t x = 0; x < n; ++x) {
    double lm = pmf_.log_probs()[x];
    if (lm == kNegInf) {
      lm = log_floor;
      ++floored_;
      warnings_.push_back("mu(" + std::to_string(x) + ") = 0 floored at 1e-300");
    }
    log_f_[x] = lm - log_poisson_pmf(final_time_, static_cast<std::int64_t>(x));
    if (!std::isfinite(log_f_[x]))
      throw NumericError("relative density is not finite at x=" + std::to_string(x));
  }
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x)
    total += std::exp(log_f_[x] + log_poisson_pmf(final_time_, static_cast<std::int64_t>(x)));
  if (std::abs(total - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "relative density does not reconstruct the target: sum f*pi_T = " << total;
    throw NumericError(os.str());
  }
}

double FlowTables::f(std::int64_t x) const {
  if (x < 0) return 0.0;
  if (x > support_cap()) return 0.0;
  return std::exp(log_f_[static_cast<std::size_t>(x)]);
}

void FlowTables::check_time(double t) const {
  if (!(t >= 0.0 && t <= final_time_))
    throw RangeError("t=" + std::to_string(t) + " outside [0, T]");
}

double FlowTables::log_h(double t, std::int64_t x) const {
  check_time(t);
  const std::int64_t cap = support_cap();
  if (x < 0 || x > cap + 1)
    throw RangeError("h: x=" + std::to_string(x) + " outside {0.." + std::to_string(cap + 1) + "}");
  const double s = final_time_ - t;
  LogSum acc;
  for (std::int64_t y = 0; x + y <= cap; ++y)
    acc.add(log_f_[static_cast<std::size_t>(x + y)] + log_poisson_pmf(s, y));
  return acc.value();
}

std::vector<double> FlowTables::log_h_row(double t) const {
  check_time(t);
  const std::int64_t cap = support_cap();
  const double s = final_time_ - t;
  std::vector<double> log_pi(static_cast<std::size_t>(cap) + 1);
  for (std::int64_t y = 0; y <= cap; ++y) log_pi[static_cast<std::size_t>(y)] = log_poisson_pmf(s, y);
  std::vector<double> row(static_cast<std::size_t>(cap) + 2, kNegInf);
  for (std::int64_t x = 0; x <= cap; ++x) {
    LogSum acc;
    for (std::int64_t y = 0; x + y <= cap; ++y)
      acc.add(log_f_[static_cast<std::size_t>(x + y)] + log_pi[static_cast<std::size_t>(y)]);
    row[static_cast<std::size_t>(x)] = acc.value();
  }
  return row;
}

FlowTables relative_density(const TargetPmf& pmf, double final_time) {
  return FlowTables(pmf, final_time);
}

double h_eval(const FlowTables& tables, double t, std::int64_t x) {
  return std::exp(tables.log_h(t, x));
}

double intensity(const FlowTables& tables, double t, std::int64_t x) {
  check_support(tables, x, tables.support_cap());
  return std::exp(tables.log_h(t, x + 1) - tables.log_h(t, x));
}

std::vector<double> intensity(const FlowTables& tables, double t,
                              std::span<const std::int64_t> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = intensity(tables, t, x[i]);
  return out;
}

std::vector<double> intensity_row(const FlowTables& tables, double t) {
  const auto lh = tables.log_h_row(t);
  std::vector<double> out(lh.size() - 1);
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = std::exp(lh[x + 1] - lh[x]);
  return out;
}

double oracle_denoiser(const TargetPmf& pmf, double final_time, double t, std::int64_t x) {
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
  if (!(t >= 0.0 && t <= final_time))
    throw RangeError("oracle_denoiser: t=" + std::to_string(t) + " outside [0, T]");
  const std::int64_t cap = pmf.support_cap();
  if (x < 0 || x > cap)
    throw RangeError("oracle_denoiser: x=" + std::to_string(x) + " outside support");
  if (t == final_time) return static_cast<double>(x);

  const double alpha = t / final_time;
  // Posterior weights relative to their maximum.
  std::vector<double> lw;
  lw.reserve(static_cast<std::size_t>(cap - x + 1));
  double m = kNegInf;
  for (std::int64_t y = x; y <= cap; ++y) {
    const double v = log_binomial_pmf(y, alpha, x) + pmf.log_probs()[static_cast<std::size_t>(y)];
    lw.push_back(v);
    m = std::max(m, v);
  }
  if (m == kNegInf)
    throw PosteriorError("posterior of X_T given X_t=" + std::to_string(x) + " is empty");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < lw.size(); ++k) {
    const double w = std::exp(lw[k] - m);
    num += w * static_cast<double>(x + static_cast<std::int64_t>(k));
    den += w;
  }
  return num / den;
}

std::vector<double> flow_marginal(const FlowTables& tables, double t) {
  const auto lh = tables.log_h_row(t);
  std::vector<double> p(lh.size() - 1);
  for (std::size_t x = 0; x < p.size(); ++x)
    p[x] = std::exp(lh[x] + log_poisson_pmf(t, static_cast<std::int64_t>(x)));
  return p;
}

std::vector<double> thinned_marginal(const TargetPmf& pmf, double alpha) {
  const std::int64_t cap = pmf.support_cap();
  std::vector<double> p(static_cast<std::size_t>(cap) + 1);
  for (std::int64_t x = 0; x <= cap; ++x) {
    LogSum acc;
    for (std::int64_t y = x; y <= cap; ++y)
      acc.add(log_binomial_pmf(y, alpha, x) + pmf.log_probs()[static_cast<std::size_t>(y)]);
    p[static_cast<std::size_t>(x)] = std::exp(acc.value());
  }
  return p;
}

std::vector<std::int64_t> binomial_thin(std::span<const std::int64_t> x_final, double alpha,
                                        Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("binomial_thin: alpha outside [0, 1]");
  std::vector<std::int64_t> out(x_final.size());
  for (std::size_t i = 0; i < x_final.size(); ++i) {
    if (x_final[i] < 0) throw RangeError("binomial_thin: negative count");
    std::binomial_distribution<std::int64_t> dist(x_final[i], alpha);
    out[i] = dist(rng);
  }
  return out;
}

std::vector<double> bridge_pmf(std::int64_t x_final, double t, double final_time) {
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
  if (!(t >= 0.0 && t <= final_time)) throw RangeError("bridge_pmf: t outside [0, T]");
  if (x_final < 0) throw RangeError("bridge_pmf: negative count");
  std::vector<double> p(static_cast<std::size_t>(x_final) + 1);
  const double alpha = t / final_time;
  for (std::int64_t k = 0; k <= x_final; ++k)
    p[static_cast<std::size_t>(k)] = std::exp(log_binomial_pmf(x_final, alpha, k));
  return p;
}

double BridgeLaw::log_prob(std::span<const std::int64_t> x) const {
  if (x.size() != x_final.size()) throw ParameterError("BridgeLaw: dimension mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) lp += log_binomial_pmf(x_final[i], alpha, x[i]);
  return lp;
}

}  // namespace binflow
