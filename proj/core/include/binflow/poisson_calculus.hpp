// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Poisson distribution, Poisson semigroup, the h-transform of a target and the
// quantities derived from it (intensities, oracle denoiser, time marginals),
// all on the truncated support of a TargetPmf.
//
// The target's relative density f = mu / pi_T is extended by zero beyond the
// support cap. Every identity below holds exactly for the truncated table; the
// only visible effect of truncation is that the intensity vanishes at the cap
// (the chain is absorbed there), which only touches negligible-mass states.
//
// Products and ratios of Poisson/Binomial terms are formed in log space.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "binflow/rng.hpp"
#include "binflow/targets.hpp"

namespace binflow {

/// Value used in place of log(0) for zero-mass target entries (log of 1e-300).
inline constexpr double kMassFloor = 1e-300;

/// log pi_t(k); -infinity for impossible values (including t = 0, k > 0).
double log_poisson_pmf(double t, std::int64_t k);
/// pi_t(k) = e^{-t} t^k / k!.
double poisson_pmf(double t, std::int64_t k);

/// log Binomial_{n, alpha}(k); -infinity outside {0..n}. alpha in [0, 1].
double log_binomial_pmf(std::int64_t n, double alpha, std::int64_t k);

/// Poisson semigroup applied to g, truncated to the table:
/// sum over y with x + y < g.size() of g(x + y) pi_t(y).
double semigroup_apply(std::span<const double> g, double t, std::int64_t x);

/// Relative density of a target with respect to pi_T together with the
/// h-transform h(t, x) = P_{T-t} f (x).
class FlowTables {
 public:
  FlowTables(TargetPmf pmf, double final_time);

  double final_time() const noexcept { return final_time_; }
  const TargetPmf& pmf() const noexcept { return pmf_; }
  int support_cap() const noexcept { return pmf_.support_cap(); }

  /// log f(x) for x in {0..N}.
  std::span<const double> log_f() const noexcept { return log_f_; }
  double f(std::int64_t x) const;

  /// Number of zero-mass entries floored at kMassFloor, and messages about them.
  std::size_t floored_count() const noexcept { return floored_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// log h(t, x) for t in [0, T] and x in {0..N+1} (-infinity at N+1).
  double log_h(double t, std::int64_t x) const;
  /// log h(t, x) for every x in {0..N+1}.
  std::vector<double> log_h_row(double t) const;

 private:
  void check_time(double t) const;

  TargetPmf pmf_;
  double final_time_;
  std::vector<double> log_f_;
  std::size_t floored_ = 0;
  std::vector<std::string> warnings_;
};

/// Builds FlowTables for `pmf` at final time T.
/// Throws ParameterError for T <= 0 and NumericError for non-finite f.
FlowTables relative_density(const TargetPmf& pmf, double final_time);

/// h(t, x) = P_{T-t} f (x). Throws RangeError for t outside [0, T].
double h_eval(const FlowTables& tables, double t, std::int64_t x);

/// Coordinatewise intensities h(t, x + e_i) / h(t, x) of the factorized
/// process whose coordinates each follow the table's law.
std::vector<double> intensity(const FlowTables& tables, double t,
                              std::span<const std::int64_t> x);
double intensity(const FlowTables& tables, double t, std::int64_t x);

/// Intensity at every x in {0..N}.
std::vector<double> intensity_row(const FlowTables& tables, double t);

/// Posterior mean E[X_T | X_t = x] by enumeration of y >= x with weights
/// Binomial_{y, t/T}(x) mu(y). Returns x at t = T.
/// Throws PosteriorError when no y >= x carries mass.
double oracle_denoiser(const TargetPmf& pmf, double final_time, double t, std::int64_t x);

/// p_t(x) = h(t, x) pi_t(x) for x in {0..N}.
std::vector<double> flow_marginal(const FlowTables& tables, double t);

/// Law of a Binomial(alpha)-thinned draw from the table:
/// sum over y of Binomial_{y, alpha}(x) mu(y), for x in {0..N}.
std::vector<double> thinned_marginal(const TargetPmf& pmf, double alpha);

/// Per-coordinate Binomial(x_T^i, alpha) draw.
std::vector<std::int64_t> binomial_thin(std::span<const std::int64_t> x_final, double alpha,
                                        Rng& rng);

/// Binomial(x_T, t/T) probabilities on {0..x_T}.
std::vector<double> bridge_pmf(std::int64_t x_final, double t, double final_time);

/// Conditional law of X_t given X_T = x_T: a product of Binomial(x_T^i, alpha).
struct BridgeLaw {
  std::vector<std::int64_t> x_final;
  double alpha = 0.0;

  double log_prob(std::span<const std::int64_t> x) const;
  std::vector<std::int64_t> sample(Rng& rng) const { return binomial_thin(x_final, alpha, rng); }
};

}  // namespace binflow
