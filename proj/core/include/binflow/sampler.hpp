// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Euler and tau-leaping simulation of the counting process started at 0.

#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "binflow/denoiser.hpp"
#include "binflow/rng.hpp"

namespace binflow {

enum class Scheme { Euler, TauLeap };
enum class TimeGrid { UniformT, UniformSigma };

std::string_view to_string(Scheme scheme) noexcept;
std::string_view to_string(TimeGrid grid) noexcept;
Scheme scheme_from_string(std::string_view name);
TimeGrid time_grid_from_string(std::string_view name);

struct SamplerConfig {
  double final_time = 1.0;
  int n_steps = 1000;
  Scheme scheme = Scheme::Euler;
  TimeGrid time_grid = TimeGrid::UniformT;
  double rate_clamp_min = 0.0;
  double t_end_guard = 1e-6;
  std::size_t n_chains = 10000;
  std::uint64_t seed = 0;
  /// Grid indices (0..n_steps) whose states are recorded.
  std::vector<int> capture_steps;

  void validate() const;
};

/// n_steps + 1 increasing times from 0 to T - t_end_guard.
std::vector<double> make_time_grid(const SamplerConfig& cfg);

struct ChainState {
  double t = 0.0;
  std::vector<std::int64_t> x;
  std::uint64_t jump_count = 0;
};

/// Each coordinate moves +1 with probability min(1, rate * dt); negative
/// rates count as 0. Draws one uniform per coordinate.
template <class Engine>
void euler_step(ChainState& state, std::span<const double> rate, double dt, Engine& engine) {
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    const double p = std::min(1.0, std::max(0.0, rate[i] * dt));
    if (uniform01(engine) < p) {
      ++state.x[i];
      ++state.jump_count;
    }
  }
  state.t += dt;
}

/// Each coordinate adds an independent Poisson(rate * dt) draw.
template <class Engine>
void tau_leap_step(ChainState& state, std::span<const double> rate, double dt, Engine& engine) {
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    const double mean = rate[i] * dt;
    if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> draw(mean);
      const std::int64_t k = draw(engine);
      state.x[i] += k;
      state.jump_count += static_cast<std::uint64_t>(k);
    }
  }
  state.t += dt;
}

struct SampleResult {
  std::size_t dim = 1;
  std::size_t n_chains = 0;
  Scheme scheme = Scheme::Euler;
  std::vector<double> grid;
  std::vector<std::int64_t> final_states;  // n_chains x dim
  std::vector<std::uint64_t> jump_counts;
  std::vector<int> capture_steps;
  std::vector<std::vector<std::int64_t>> captured;  // per capture step, n_chains x dim
  std::uint64_t clamp_events = 0;
};

/// Runs n_chains chains from X_0 = 0. Chain i draws from
/// StreamEngine(stream_seed(seed, i)). Rates are evaluated at the start of
/// each step and clamped below at rate_clamp_min; every clamped
/// (chain, step, coordinate) counts as one event.
SampleResult sample_chains(const RateModel& rates, const SamplerConfig& cfg);

/// Same with the rate (m - x)/(T - t) of a denoiser.
SampleResult sample_chains(const Denoiser& denoiser, const SamplerConfig& cfg);

/// Exact law of the d = 1 scheme on {0..max_state} at each grid index in
/// cfg.capture_steps followed by the final index. Mass leaving the range is
/// dropped.
std::vector<std::vector<double>> scheme_law(const RateModel& rates, const SamplerConfig& cfg,
                                            std::size_t max_state);

/// Empirical pmf of one coordinate on {0..max}.
std::vector<double> empirical_pmf(std::span<const std::int64_t> values, std::size_t dim = 1,
                                  std::size_t coord = 0);

/// CSV with header chain_id,x_final (or x_0..x_{d-1} for d > 1).
void write_samples_csv(std::ostream& out, const SampleResult& result);
/// CSV with header chain_id,step,t,x[_i] for the captured steps.
void write_trajectory_csv(std::ostream& out, const SampleResult& result);
/// mean, variance and histogram of the final states.
nlohmann::json sample_summary(const SampleResult& result);

}  // namespace binflow
