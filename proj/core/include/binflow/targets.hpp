// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic count distributions on a truncated support {0, ..., N}.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "binflow/rng.hpp"

namespace binflow {

enum class Family { Poisson, PoissonMixture, ZIP, NBM, BNB, Zipf, YuleSimon, Custom };

std::string_view to_string(Family family) noexcept;
/// Parses the names produced by `to_string`; throws ParameterError otherwise.
Family family_from_string(std::string_view name);

/// Default allowed discarded tail mass for a family.
///
/// Poisson, ZIP and custom tables must be essentially untruncated (1e-8).
/// The remaining families are defined by their truncated support, and their
/// tail mass at the reference caps ranges from 6e-5 (Poisson mixture) to
/// 4.4e-2 (Zipf), so they accept up to 5e-2 and report what was dropped.
double default_max_tail_mass(Family family) noexcept;

/// A normalized probability table on {0, ..., support_cap}. Immutable.
class TargetPmf {
 public:
  int support_cap() const noexcept { return support_cap_; }
  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  std::span<const double> log_probs() const noexcept { return log_probs_; }
  double prob(std::int64_t x) const;
  Family family() const noexcept { return family_; }
  std::span<const double> params() const noexcept { return params_; }
  /// Untruncated mass beyond the cap, measured before renormalization.
  double tail_mass() const noexcept { return tail_mass_; }
  /// Short human-readable label such as "Poisson(5)".
  std::string label() const;

 private:
  friend TargetPmf make_target(Family, std::span<const double>, int, std::optional<double>);
  friend TargetPmf make_custom_target(std::span<const double>);

  TargetPmf(Family family, std::vector<double> params, std::vector<double> unnormalized,
            double tail_mass);

  int support_cap_ = 0;
  Family family_ = Family::Custom;
  std::vector<double> params_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
  double tail_mass_ = 0.0;
};

/// Builds a family table truncated to {0, ..., support_cap} and renormalized.
///
/// Parameter layouts:
///   Poisson         {rate}
///   PoissonMixture  {w_1, rate_1, w_2, rate_2, ...}
///   ZIP             {w_0, rate}
///   NBM             {w_1, r_1, p_1, w_2, r_2, p_2, ...}, NB_{r,p}(x) ∝ p^r (1-p)^x
///   BNB             {r, a, b}: NB_{r,p} mixed over p ~ Beta(a, b)
///   Zipf            {alpha}, support starts at 1
///   YuleSimon       {rho}, support starts at 1
/// Custom tables go through make_custom_target.
///
/// Throws ParameterError for invalid parameters and TruncationError when the
/// discarded tail exceeds `max_tail_mass` (default: default_max_tail_mass).
TargetPmf make_target(Family family, std::span<const double> params, int support_cap,
                      std::optional<double> max_tail_mass = std::nullopt);

TargetPmf make_target(Family family, std::initializer_list<double> params, int support_cap,
                      std::optional<double> max_tail_mass = std::nullopt);

/// Table from explicit (possibly unnormalized) non-negative weights.
TargetPmf make_custom_target(std::span<const double> weights);
TargetPmf make_custom_target(std::initializer_list<double> weights);

/// Log-probability at x; -infinity where the table has no mass.
/// Throws RangeError when x is outside {0, ..., support_cap}.
double log_pmf(const TargetPmf& pmf, std::int64_t x);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(const TargetPmf& pmf);

/// n i.i.d. draws by inverse-CDF lookup.
std::vector<std::int64_t> sample_target(const TargetPmf& pmf, std::size_t n, Rng& rng);
std::vector<std::int64_t> sample_target(const TargetPmf& pmf, std::size_t n, std::uint64_t seed);

/// Writes "x,prob" rows with a header.
void write_pmf_csv(std::ostream& out, const TargetPmf& pmf);

/// A named parameter set for one of the reference synthetic problems.
struct TargetSpec {
  std::string name;
  Family family;
  std::vector<double> params;
  int support_cap;

  TargetPmf build() const { return make_target(family, params, support_cap); }
};

/// The seven reference synthetic problems with their support caps.
const std::vector<TargetSpec>& synthetic_targets();

/// Looks up a reference problem by name ("poisson", "zip", ...).
const TargetSpec& synthetic_target(std::string_view name);

}  // namespace binflow
