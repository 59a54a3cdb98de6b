// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Bregman divergences, training weights, the log-noise time parameterization
// and the affine preconditioning used by the learned denoiser.

#pragma once

#include <span>
#include <string_view>

#include "binflow/rng.hpp"

namespace binflow {

inline constexpr double kEpsNoise = 1e-5;
inline constexpr double kEpsCin = 0.01;
/// Largest t at which weight_synthetic is evaluated.
inline constexpr double kWeightTimeCap = 1.0 - 1e-6;
/// Lower bound on a model rate inside the entropic divergence.
inline constexpr double kRateFloor = 1e-10;

/// Bregman divergence of l(x) = |x|^2 / 2, i.e. 0.5 * sum (a_i - b_i)^2.
/// The squared-error training loss |a - b|^2 equals twice this value.
double bregman_quadratic(std::span<const double> a, std::span<const double> b);

/// Bregman divergence of l(a) = sum a_i log a_i:
/// sum a_i log a_i - a_i log b_i - a_i + b_i, with 0 log 0 = 0.
/// Throws DomainError if any b_i <= 0 or a_i < 0.
double bregman_entropic(std::span<const double> a, std::span<const double> b);
/// Scalar form of bregman_entropic without argument checks.
double bregman_entropic_term(double a, double b) noexcept;

/// (1 - t)^{-1/2}, with t capped at kWeightTimeCap.
double weight_synthetic(double t);

/// sigma = -log(t + eps_noise) for t in [0, 1].
double sigma_of_t(double t);
/// t = exp(-sigma) - eps_noise for sigma in [-log(1 + eps_noise), -log(eps_noise)].
double t_of_sigma(double sigma);

struct NoiseSchedule {
  enum class Mode { UniformTime, TruncatedGaussianSigma };
  Mode mode = Mode::UniformTime;
  double mu_sigma = 0.0;
  double gamma_sigma = 1.0;
};

std::string_view to_string(NoiseSchedule::Mode mode) noexcept;
NoiseSchedule::Mode noise_mode_from_string(std::string_view name);

struct NoiseLevel {
  double t = 0.0;
  double sigma = 0.0;
};

/// Draws a training time on [0, 1]: uniformly, or through sigma drawn from
/// N(mu_sigma, gamma_sigma^2) restricted to [0, -log(eps_noise)] by rejection.
NoiseLevel sample_noise_level(const NoiseSchedule& schedule, Rng& rng);

/// Preconditioning coefficients at one time (final time 1).
struct PrecondCoeffs {
  double c_in = 0.0;
  double s_in = 0.0;
  double c_skip = 0.0;
  double c_out = 0.0;
  double w_sq = 0.0;
};

/// Coefficients from the data mean and variance; eps_cin regularizes c_in and w^2.
///   c_in   = 1 / sqrt(mu t (1 - t) + s2 t^2 + eps_cin)
///   s_in   = -mu / sqrt(s2)
///   c_skip = s2 / (mu (1 - t) + s2 t)
///   c_out  = sqrt(s2 mu (1 - t) / (mu (1 - t) + s2 t))
///   w^2    = 1 / (c_out^2 + (mu - c_skip mu t)^2 + eps_cin)
PrecondCoeffs precond_coeffs(double t, double mu_data, double sigma2_data,
                             double eps_cin = kEpsCin);

struct AffineBaseline {
  double b_skip = 0.0;
  double b_out = 0.0;
};

/// Minimizer of E|X_1 - (b_skip X_t + b_out mu_data)|^2 over affine maps.
AffineBaseline baseline_affine(double t, double mu_data, double sigma2_data);

}  // namespace binflow
