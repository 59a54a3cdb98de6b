// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Denoisers m(t, x) ~ E[X_T | X_t = x] and the jump rates derived from them.

#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "binflow/poisson_calculus.hpp"
#include "binflow/targets.hpp"

namespace binflow {

class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual std::size_t dim() const = 0;
  virtual double final_time() const = 0;
  /// Writes m(t, x) into `out` (same length as x).
  virtual void denoise(double t, std::span<const std::int64_t> x, std::span<double> out) const = 0;

  std::vector<double> operator()(double t, std::span<const std::int64_t> x) const;
};

/// Exact posterior mean for a factorized target whose coordinates are i.i.d.
/// with law `pmf`. States above the support cap are returned unchanged.
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(TargetPmf pmf, double final_time, std::size_t dim = 1);

  std::size_t dim() const override { return dim_; }
  double final_time() const override { return final_time_; }
  void denoise(double t, std::span<const std::int64_t> x, std::span<double> out) const override;

 private:
  TargetPmf pmf_;
  double final_time_;
  std::size_t dim_;
};

/// The best affine predictor b_skip(t) x + b_out(t) mu_data. Not a posterior
/// mean in general; useful as a baseline and as a negative control.
class AffineBaselineDenoiser final : public Denoiser {
 public:
  AffineBaselineDenoiser(double mu_data, double sigma2_data, double final_time = 1.0,
                         std::size_t dim = 1);

  std::size_t dim() const override { return dim_; }
  double final_time() const override { return final_time_; }
  void denoise(double t, std::span<const std::int64_t> x, std::span<double> out) const override;

 private:
  double mu_;
  double sigma2_;
  double final_time_;
  std::size_t dim_;
};

/// Per-coordinate jump rates lambda(t, x) of a counting process on [0, T].
class RateModel {
 public:
  virtual ~RateModel() = default;

  virtual std::size_t dim() const = 0;
  virtual double final_time() const = 0;
  virtual void rate(double t, std::span<const std::int64_t> x, std::span<double> out) const = 0;
};

/// Exact intensities h(t, x + e_i) / h(t, x) from FlowTables; 0 at and above
/// the support cap.
class IntensityRate final : public RateModel {
 public:
  explicit IntensityRate(FlowTables tables, std::size_t dim = 1);

  std::size_t dim() const override { return dim_; }
  double final_time() const override { return tables_.final_time(); }
  void rate(double t, std::span<const std::int64_t> x, std::span<double> out) const override;

  const FlowTables& tables() const noexcept { return tables_; }

 private:
  FlowTables tables_;
  std::size_t dim_;
};

/// Componentwise max(clamp, (m(t, x) - x) / (T - t)).
/// Throws RangeError for t >= T.
std::vector<double> rate_from_denoiser(const Denoiser& denoiser, double t,
                                       std::span<const std::int64_t> x, double final_time,
                                       double clamp = 0.0);

/// Rates obtained from a denoiser through the discrete Tweedie relation.
/// Counts how many components hit the lower clamp.
class DenoiserRate final : public RateModel {
 public:
  /// `denoiser` must outlive this object.
  explicit DenoiserRate(const Denoiser& denoiser, double clamp = 0.0);

  std::size_t dim() const override { return denoiser_.dim(); }
  double final_time() const override { return denoiser_.final_time(); }
  void rate(double t, std::span<const std::int64_t> x, std::span<double> out) const override;

  std::uint64_t clamp_events() const noexcept { return clamp_events_.load(); }

 private:
  const Denoiser& denoiser_;
  double clamp_;
  mutable std::atomic<std::uint64_t> clamp_events_{0};
};

}  // namespace binflow
