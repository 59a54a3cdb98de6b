// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/denoiser.hpp"

#include <algorithm>
#include <string>

#include "binflow/error.hpp"
#include "binflow/losses.hpp"

namespace binflow {

std::vector<double> Denoiser::operator()(double t, std::span<const std::int64_t> x) const {
  std::vector<double> out(x.size());
  denoise(t, x, out);
  return out;
}

OracleDenoiser::OracleDenoiser(TargetPmf pmf, double final_time, std::size_t dim)
    : pmf_(std::move(pmf)), final_time_(final_time), dim_(dim) {
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
}

void OracleDenoiser::denoise(double t, std::span<const std::int64_t> x,
                             std::span<double> out) const {
  const std::int64_t cap = pmf_.support_cap();
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = x[i] > cap ? static_cast<double>(x[i]) : oracle_denoiser(pmf_, final_time_, t, x[i]);
}

AffineBaselineDenoiser::AffineBaselineDenoiser(double mu_data, double sigma2_data,
                                               double final_time, std::size_t dim)
    : mu_(mu_data), sigma2_(sigma2_data), final_time_(final_time), dim_(dim) {
  if (!(sigma2_data > 0.0)) throw ParameterError("sigma2_data must be > 0");
}

void AffineBaselineDenoiser::denoise(double t, std::span<const std::int64_t> x,
                                     std::span<double> out) const {
  const AffineBaseline b = baseline_affine(t / final_time_, mu_, sigma2_);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = b.b_skip * static_cast<double>(x[i]) + b.b_out * mu_;
}

IntensityRate::IntensityRate(FlowTables tables, std::size_t dim)
    : tables_(std::move(tables)), dim_(dim) {}

void IntensityRate::rate(double t, std::span<const std::int64_t> x, std::span<double> out) const {
  const std::int64_t cap = tables_.support_cap();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= cap ? 0.0 : intensity(tables_, t, x[i]);
}

std::vector<double> rate_from_denoiser(const Denoiser& denoiser, double t,
                                       std::span<const std::int64_t> x, double final_time,
                                       double clamp) {
  if (!(t < final_time))
    throw RangeError("rate_from_denoiser: t=" + std::to_string(t) + " must be < T");
  std::vector<double> m = denoiser(t, x);
  for (std::size_t i = 0; i < x.size(); ++i)
    m[i] = std::max(clamp, (m[i] - static_cast<double>(x[i])) / (final_time - t));
  return m;
}

DenoiserRate::DenoiserRate(const Denoiser& denoiser, double clamp)
    : denoiser_(denoiser), clamp_(clamp) {}

void DenoiserRate::rate(double t, std::span<const std::int64_t> x, std::span<double> out) const {
  const double final_time = denoiser_.final_time();
  if (!(t < final_time))
    throw RangeError("rate: t=" + std::to_string(t) + " must be < T");
  denoiser_.denoise(t, x, out);
  std::uint64_t clamped = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (out[i] - static_cast<double>(x[i])) / (final_time - t);
    if (r < clamp_) {
      out[i] = clamp_;
      ++clamped;
    } else {
      out[i] = r;
    }
  }
  if (clamped) clamp_events_.fetch_add(clamped, std::memory_order_relaxed);
}

}  // namespace binflow
