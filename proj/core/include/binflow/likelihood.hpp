// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Negative log-likelihood through the time integral
//   -log mu(x) = int_0^T E_{y ~ Bin(x, t/T)} D((x - y)/(T - t), rate(t, y)) dt
// with D the entropic Bregman divergence.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <span>
#include <string_view>
#include <vector>

#include "binflow/denoiser.hpp"
#include "binflow/poisson_calculus.hpp"
#include "binflow/rng.hpp"

namespace binflow {

enum class NllMode { MonteCarlo, Quadrature };

std::string_view to_string(NllMode mode) noexcept;
NllMode nll_mode_from_string(std::string_view name);

struct NllEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_time = 0;
  int n_inner = 0;
  NllMode mode = NllMode::Quadrature;
};

/// D((x - y)/(T - t), rate(t, y)) summed over coordinates. Non-positive rates
/// are raised to kRateFloor and counted in `floor_events` when given.
double nll_integrand(const RateModel& rates, std::span<const std::int64_t> x, double t,
                     std::span<const std::int64_t> y, std::uint64_t* floor_events = nullptr);

/// Time nodes and weights on [0, T): log-time substitution v = -log(1 - t/T),
/// v in [0, 30], split into geometric panels of 16 Gauss-Legendre points.
/// The node count is rounded up to a multiple of 16.
struct NllTimeRule {
  std::vector<double> t;
  std::vector<double> w;
};
NllTimeRule nll_time_rule(double final_time, int n_nodes);

/// Deterministic d = 1 estimator: exact inner binomial sum and the time rule
/// above. Rates are computed once per (node, y) and reused across x.
class NllQuadrature {
 public:
  NllQuadrature(const RateModel& rates, int n_nodes = 256);

  NllEstimate operator()(std::int64_t x);
  std::uint64_t floor_events() const noexcept { return floor_events_; }

 private:
  void extend(std::int64_t x);

  const RateModel& rates_;
  NllTimeRule rule_;
  std::int64_t cached_max_ = -1;
  std::vector<std::vector<double>> rate_;  // per node, rate(t, y) for y = 0..cached_max_
  std::uint64_t floor_events_ = 0;
};

/// One-off quadrature with the exact intensity. Throws RangeError when x is
/// outside the support.
NllEstimate nll_quadrature(const FlowTables& tables, std::int64_t x, int n_nodes = 256);

/// Uniform-time Monte Carlo: n_time times t ~ U(0, T), n_inner thinnings per
/// time. std_error comes from the spread of the per-time means.
NllEstimate nll_monte_carlo(const RateModel& rates, std::span<const std::int64_t> x, int n_time,
                            int n_inner, Rng& rng);

struct NllSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Mean over samples with standard error of the mean.
NllSummary summarize_nll(std::span<const double> values);

/// CSV with header x,nll,std_error,mode.
void write_nll_csv(std::ostream& out, std::span<const std::int64_t> x,
                   std::span<const NllEstimate> est);

}  // namespace binflow
