// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binflow/error.hpp"

namespace binflow {

double bregman_quadratic(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ParameterError("bregman_quadratic: length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return 0.5 * s;
}

double bregman_entropic_term(double a, double b) noexcept {
  if (a == 0.0) return b;
  return a * std::log(a / b) - a + b;
}

double bregman_entropic(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ParameterError("bregman_entropic: length mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(b[i] > 0.0)) throw DomainError("bregman_entropic: b must be > 0");
    if (!(a[i] >= 0.0)) throw DomainError("bregman_entropic: a must be >= 0");
    s += bregman_entropic_term(a[i], b[i]);
  }
  return s;
}

double weight_synthetic(double t) {
  const double tc = std::min(t, kWeightTimeCap);
  return 1.0 / std::sqrt(1.0 - tc);
}

double sigma_of_t(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("sigma_of_t: t outside [0, 1]");
  return -std::log(t + kEpsNoise);
}

double t_of_sigma(double sigma) {
  const double lo = -std::log1p(kEpsNoise);
  const double hi = -std::log(kEpsNoise);
  // One ulp of slack on each end so that sigma_of_t's outputs round-trip.
  if (!(sigma >= lo - 1e-15 && sigma <= hi + 1e-12))
    throw RangeError("t_of_sigma: sigma outside [-log(1 + eps), -log(eps)]");
  return std::clamp(std::exp(-sigma) - kEpsNoise, 0.0, 1.0);
}

std::string_view to_string(NoiseSchedule::Mode mode) noexcept {
  return mode == NoiseSchedule::Mode::UniformTime ? "UniformTime" : "TruncatedGaussianSigma";
}

NoiseSchedule::Mode noise_mode_from_string(std::string_view name) {
  if (name == "UniformTime") return NoiseSchedule::Mode::UniformTime;
  if (name == "TruncatedGaussianSigma") return NoiseSchedule::Mode::TruncatedGaussianSigma;
  throw ParameterError("unknown noise schedule mode '" + std::string(name) + "'");
}

NoiseLevel sample_noise_level(const NoiseSchedule& schedule, Rng& rng) {
  if (schedule.mode == NoiseSchedule::Mode::UniformTime) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t = unif(rng);
    return {t, sigma_of_t(t)};
  }
  if (!(schedule.gamma_sigma > 0.0)) throw ParameterError("gamma_sigma must be > 0");
  const double hi = -std::log(kEpsNoise);
  std::normal_distribution<double> normal(schedule.mu_sigma, schedule.gamma_sigma);
  for (;;) {
    const double s = normal(rng);
    if (s >= 0.0 && s <= hi) return {t_of_sigma(s), s};
  }
}

PrecondCoeffs precond_coeffs(double t, double mu_data, double sigma2_data, double eps_cin) {
  if (!(sigma2_data > 0.0)) throw ParameterError("precond_coeffs: sigma2_data must be > 0");
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("precond_coeffs: t outside [0, 1]");
  const double mu = mu_data;
  const double s2 = sigma2_data;
  const double denom = mu * (1.0 - t) + s2 * t;
  PrecondCoeffs c;
  c.c_in = 1.0 / std::sqrt(mu * t * (1.0 - t) + s2 * t * t + eps_cin);
  c.s_in = -mu / std::sqrt(s2);
  c.c_skip = s2 / denom;
  c.c_out = std::sqrt(s2 * mu * (1.0 - t) / denom);
  const double bias = mu - c.c_skip * mu * t;
  c.w_sq = 1.0 / (c.c_out * c.c_out + bias * bias + eps_cin);
  return c;
}

AffineBaseline baseline_affine(double t, double mu_data, double sigma2_data) {
  if (!(sigma2_data > 0.0)) throw ParameterError("baseline_affine: sigma2_data must be > 0");
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("baseline_affine: t outside [0, 1]");
  const double b_skip = sigma2_data / (mu_data * (1.0 - t) + sigma2_data * t);
  return {b_skip, 1.0 - t * b_skip};
}

}  // namespace binflow
