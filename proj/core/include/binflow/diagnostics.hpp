// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Numerical checks of the flow identities and sample-quality metrics.

#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "binflow/denoiser.hpp"
#include "binflow/sampler.hpp"
#include "binflow/targets.hpp"

namespace binflow {

inline constexpr int kThresholdTableVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

struct CheckResult {
  std::string name;
  double value = 0.0;
  /// Absent for informational metrics.
  std::optional<double> threshold;
  /// true: pass iff value >= threshold; false: pass iff value < threshold.
  bool at_least = false;
  bool pass = false;
  std::string grid;
  std::string error;
  nlohmann::json details = nlohmann::json::object();

  void decide();
};

std::vector<double> default_t_grid();

/// max |m(t,x) - x - (T - t) lambda(t,x)| over states with marginal mass above
/// mass_floor. Uses the exact posterior mean unless `denoiser` is given.
CheckResult check_tweedie(const TargetPmf& pmf, double final_time, std::span<const double> t_grid,
                          double mass_floor, const Denoiser* denoiser = nullptr);

/// max over t of the L1 distance between h * pi_t and the thinned mixture.
CheckResult check_marginal(const TargetPmf& pmf, double final_time, std::span<const double> t_grid);

/// Central differences of p_t against lambda(x-1)p(x-1) - lambda(x)p(x);
/// value is the smallest observed convergence order.
CheckResult check_kolmogorov_forward(const TargetPmf& pmf, double final_time, double t,
                                     std::span<const double> dt_list);

/// |int sum_x p_t (lambda log lambda - lambda + 1) dt - sum mu log(mu / pi_T)|.
CheckResult check_kl_identity(const TargetPmf& pmf, double final_time, int n_t_nodes);

/// max relative residual of q_t(x+1)/q_t(x) = (T - t)/(x + 1) lambda(T - t, x)
/// with q_t = p_{T-t}, over states whose mass exceeds mass_min.
CheckResult check_time_reversal(const TargetPmf& pmf, double final_time,
                                std::span<const double> t_grid, double mass_min = 1e-12);

/// d/dt log h(t,x) = 1 - lambda(t,x) by central differences; residual
/// relative to max(1, |1 - lambda|).
CheckResult check_semigroup_backward(const TargetPmf& pmf, double final_time,
                                     std::span<const double> t_grid, double dt = 1e-5,
                                     double mass_floor = 1e-10);

/// max |nll_quadrature(x) + log mu(x)| over x with mu(x) >= mass_min.
CheckResult check_nll_identity(const TargetPmf& pmf, double final_time, int n_nodes = 256,
                               double mass_min = 1e-6);

/// Conditioned on X_T = k, the law of the chain at the middle grid time
/// against Binomial(k, t_mid/T) by chi-squared, for every k with at least
/// min_hits chains. value is the smallest Bonferroni-adjusted p-value.
CheckResult check_bridge_chi2(const TargetPmf& pmf, const SamplerConfig& cfg,
                              std::size_t min_hits = 2000);

/// sum_k |F_emp(k) - F(k)|.
double w1_empirical(std::span<const std::int64_t> samples, const TargetPmf& pmf);
/// sum_k |F_p(k) - F_q(k)| for pmfs on {0, 1, ...}.
double w1_pmf(std::span<const double> p, std::span<const double> q);

struct DiagnosticsConfig {
  double final_time = 1.0;
  /// Empty selects every default check.
  std::vector<std::string> enabled_checks;
  std::map<std::string, double> thresholds;
  std::vector<double> t_grid = default_t_grid();
  double mass_floor = 1e-10;
  int nll_nodes = 256;
  int kl_nodes = 256;
  double kfe_t = 0.5;
  std::vector<double> kfe_dts{1e-3, 5e-4, 2.5e-4};
  SamplerConfig sampler;
  std::size_t nll_samples = 10000;
  std::uint64_t seed = 0;

  DiagnosticsConfig();
};

/// Names accepted in enabled_checks and thresholds.
const std::vector<std::string>& known_checks();
const std::vector<std::string>& default_checks();
/// Threshold applied when the config does not override it.
std::optional<double> default_threshold(const std::string& check, Family family);

struct DiagnosticsReport {
  std::string target;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool all_pass() const;
  const CheckResult* find(const std::string& name) const;
};

/// Runs every enabled check. Failures and exceptions are recorded, never
/// thrown. Throws ParameterError for unknown check names.
DiagnosticsReport run_suite(const TargetPmf& pmf, const Denoiser& denoiser,
                            const DiagnosticsConfig& cfg);

nlohmann::json to_json(const DiagnosticsReport& report);

}  // namespace binflow
