// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "binflow/error.hpp"
#include "binflow/poisson_calculus.hpp"

namespace binflow {
namespace {

TargetPmf poisson(double rate, int cap = 40) { return make_target(Family::Poisson, {rate}, cap); }

TEST(PoissonPmf, FrozenValues) {
  EXPECT_NEAR(poisson_pmf(5.0, 5), 0.17546736976785068, 1e-15);
  EXPECT_DOUBLE_EQ(poisson_pmf(0.0, 0), 1.0);
  EXPECT_DOUBLE_EQ(poisson_pmf(0.0, 3), 0.0);
  EXPECT_NEAR(std::exp(log_binomial_pmf(10, 0.3, 4)), 0.200120949, 1e-12);
  EXPECT_TRUE(std::isinf(log_binomial_pmf(3, 0.5, 4)));
  EXPECT_DOUBLE_EQ(std::exp(log_binomial_pmf(3, 1.0, 3)), 1.0);
  EXPECT_DOUBLE_EQ(std::exp(log_binomial_pmf(3, 0.0, 0)), 1.0);
}

TEST(Semigroup, ZeroTimeIsIdentity) {
  const std::vector<double> g{1.0, 2.0, 5.0};
  for (int x = 0; x < 3; ++x) EXPECT_DOUBLE_EQ(semigroup_apply(g, 0.0, x), g[x]);
}

TEST(Semigroup, ConstantFunctionPreservedUpToTruncation) {
  const std::vector<double> g(200, 1.0);
  EXPECT_NEAR(semigroup_apply(g, 2.0, 0), 1.0, 1e-14);
}

TEST(Semigroup, IdentityFunctionShiftsByTime) {
  std::vector<double> g(200);
  std::iota(g.begin(), g.end(), 0.0);
  EXPECT_NEAR(semigroup_apply(g, 1.5, 3), 4.5, 1e-12);
}

TEST(FlowTables, PoissonReferenceGivesConstantUnitIntensity) {
  // mu = pi_T: f == 1 on the support, lambda == 1 away from the cap
  const FlowTables tab(poisson(1.0, 60), 1.0);
  for (double t : {0.0, 0.3, 0.9})
    for (int x = 0; x < 15; ++x) EXPECT_NEAR(intensity(tab, t, x), 1.0, 1e-10);
}

TEST(FlowTables, PoissonTargetHasConstantIntensity) {
  const FlowTables tab(poisson(3.0), 1.0);
  for (double t : {0.1, 0.5, 0.95})
    for (int x = 0; x < 12; ++x) EXPECT_NEAR(intensity(tab, t, x), 3.0, 1e-8);
}

TEST(FlowTables, InitialHIsOne) {
  for (const auto& s : synthetic_targets()) {
    const FlowTables tab(s.build(), 1.0);
    EXPECT_NEAR(h_eval(tab, 0.0, 0), 1.0, 1e-10) << s.name;
  }
}

TEST(FlowTables, FinalHIsRelativeDensity) {
  const auto p = synthetic_target("zip").build();
  const FlowTables tab(p, 1.0);
  for (int x = 0; x <= 10; ++x)
    EXPECT_NEAR(h_eval(tab, 1.0, x) * poisson_pmf(1.0, x), p.prob(x), 1e-14) << x;
}

TEST(FlowTables, ZeroMassEntriesAreFlooredWithWarning) {
  const FlowTables tab(synthetic_target("zipf").build(), 1.0);
  EXPECT_EQ(tab.floored_count(), 1u);
  EXPECT_FALSE(tab.warnings().empty());
}

TEST(FlowTables, IntensityVanishesAtCap) {
  const FlowTables tab(poisson(5.0), 1.0);
  EXPECT_EQ(intensity(tab, 0.5, 40), 0.0);
  EXPECT_THROW(intensity(tab, 0.5, 41), RangeError);
  EXPECT_THROW(h_eval(tab, 1.5, 0), RangeError);
}

TEST(FlowTables, RejectsNonPositiveTime) {
  EXPECT_THROW(FlowTables(poisson(5.0), 0.0), ParameterError);
}

TEST(FlowTables, IntensityIsNonNegativeEverywhere) {
  for (const auto& s : synthetic_targets()) {
    const FlowTables tab(s.build(), 1.0);
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.999})
      for (const double l : intensity_row(tab, t)) ASSERT_GE(l, 0.0) << s.name;
  }
}

TEST(OracleDenoiser, PoissonClosedForm) {
  // X_T = X_t + Poisson((T - t) rate) for a Poisson target
  const auto p = poisson(3.0);
  EXPECT_NEAR(oracle_denoiser(p, 1.0, 0.25, 2), 2.0 + 0.75 * 3.0, 1e-9);
}

TEST(OracleDenoiser, CollapsesAtFinalTime) {
  const auto p = synthetic_target("bnb").build();
  EXPECT_DOUBLE_EQ(oracle_denoiser(p, 1.0, 1.0, 7), 7.0);
  EXPECT_NEAR(oracle_denoiser(p, 1.0, 1.0 - 1e-12, 7), 7.0, 1e-9);
}

TEST(OracleDenoiser, EmptyPosteriorThrows) {
  const auto p = make_custom_target({1.0, 1.0, 0.0, 0.0});
  EXPECT_THROW(oracle_denoiser(p, 1.0, 0.5, 2), PosteriorError);
  EXPECT_THROW(oracle_denoiser(p, 1.0, 1.5, 0), RangeError);
}

TEST(OracleDenoiser, AtTimeZeroIsTargetMean) {
  const auto p = synthetic_target("nbm").build();
  EXPECT_NEAR(oracle_denoiser(p, 1.0, 0.0, 0), moments(p).mean, 1e-10);
}

TEST(Marginals, EndpointsAreDeltaAndTarget) {
  const auto p = synthetic_target("zip").build();
  const FlowTables tab(p, 1.0);
  const auto m0 = flow_marginal(tab, 0.0);
  EXPECT_NEAR(m0[0], 1.0, 1e-12);
  const auto m1 = flow_marginal(tab, 1.0);
  for (int x = 0; x <= 50; ++x) EXPECT_NEAR(m1[x], p.prob(x), 1e-13);
}

TEST(Marginals, FlowMatchesThinnedMixtureOnAllTargets) {
  for (const auto& s : synthetic_targets()) {
    const auto p = s.build();
    const FlowTables tab(p, 1.0);
    for (double t : {0.1, 0.5, 0.9}) {
      const auto a = flow_marginal(tab, t);
      const auto b = thinned_marginal(p, t);
      double l1 = 0.0;
      for (std::size_t x = 0; x < a.size(); ++x) l1 += std::abs(a[x] - b[x]);
      EXPECT_LT(l1, 1e-10) << s.name << " t=" << t;
    }
  }
}

TEST(Marginals, NonUnitFinalTime) {
  const auto p = synthetic_target("poisson").build();
  const FlowTables tab(p, 2.5);
  const auto a = flow_marginal(tab, 1.0);
  const auto b = thinned_marginal(p, 1.0 / 2.5);
  for (std::size_t x = 0; x < a.size(); ++x) EXPECT_NEAR(a[x], b[x], 1e-12);
}

TEST(Tweedie, OracleMatchesIntensityOnPoissonMixture) {
  const auto p = synthetic_target("poisson_mixture").build();
  const FlowTables tab(p, 1.0);
  for (double t : {0.2, 0.6})
    for (int x : {0, 1, 5, 50, 90}) {
      const double m = oracle_denoiser(p, 1.0, t, x);
      EXPECT_NEAR(m - x, (1.0 - t) * intensity(tab, t, x), 1e-8 * std::max(1.0, m));
    }
}

TEST(Bridge, BinomialLaw) {
  const auto b = bridge_pmf(4, 0.5, 1.0);
  ASSERT_EQ(b.size(), 5u);
  EXPECT_NEAR(b[2], 0.375, 1e-15);
  const BridgeLaw law{{4, 0}, 0.5};
  EXPECT_NEAR(std::exp(law.log_prob(std::vector<std::int64_t>{2, 0})), 0.375, 1e-15);
}

TEST(Thinning, ExtremesAndMean) {
  Rng rng(5);
  const std::vector<std::int64_t> x{0, 7, 100};
  EXPECT_EQ(binomial_thin(x, 0.0, rng), (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_EQ(binomial_thin(x, 1.0, rng), x);
  EXPECT_THROW(binomial_thin(x, 1.5, rng), RangeError);
  double s = 0.0;
  const std::vector<std::int64_t> one{10};
  for (int i = 0; i < 100000; ++i) s += static_cast<double>(binomial_thin(one, 0.3, rng)[0]);
  // sd of the mean: sqrt(10 * 0.21 / 1e5) ~ 0.0046
  EXPECT_NEAR(s / 1e5, 3.0, 0.02);
}

TEST(Thinning, ThinnedLawSumsToOne) {
  for (const auto& s : synthetic_targets()) {
    const auto m = thinned_marginal(s.build(), 0.37);
    EXPECT_NEAR(std::accumulate(m.begin(), m.end(), 0.0), 1.0, 1e-12) << s.name;
  }
}

}  // namespace
}  // namespace binflow
