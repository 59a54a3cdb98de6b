// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "binflow/diagnostics.hpp"
#include "binflow/error.hpp"
#include "binflow/poisson_calculus.hpp"

namespace binflow {
namespace {

TEST(W1, PointMasses) {
  const std::vector<double> a{1.0, 0.0, 0.0, 0.0}, b{0.0, 0.0, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(w1_pmf(a, b), 3.0);
  EXPECT_DOUBLE_EQ(w1_pmf(a, a), 0.0);
  const std::vector<double> c{1.0};
  EXPECT_DOUBLE_EQ(w1_pmf(c, b), 3.0);
}

TEST(W1, EmpiricalAgainstTable) {
  const auto pmf = make_custom_target({0.5, 0.5});
  const std::vector<std::int64_t> zeros(10, 0);
  EXPECT_DOUBLE_EQ(w1_empirical(zeros, pmf), 0.5);
  const std::vector<std::int64_t> half{0, 1};
  EXPECT_DOUBLE_EQ(w1_empirical(half, pmf), 0.0);
  const std::vector<std::int64_t> far{5};
  EXPECT_DOUBLE_EQ(w1_empirical(far, pmf), 4.5);
  EXPECT_THROW(w1_empirical(std::vector<std::int64_t>{}, pmf), ParameterError);
}

TEST(Checks, KlIdentityMatchesClosedForm) {
  const auto pmf = make_target(Family::Poisson, {3.0}, 40);
  const auto r = check_kl_identity(pmf, 1.0, 256);
  EXPECT_NEAR(r.details["relative_entropy"].get<double>(), 1.2958368660043298, 1e-10);
  EXPECT_LT(r.value, 1e-6);
}

TEST(Checks, TweedieRejectsAffineBaselineOnMixture) {
  const auto pmf = synthetic_target("poisson_mixture").build();
  const auto mom = moments(pmf);
  const AffineBaselineDenoiser affine(mom.mean, mom.variance, 1.0);
  const auto grid = default_t_grid();
  auto bad = check_tweedie(pmf, 1.0, grid, 1e-10, &affine);
  bad.threshold = 1e-8;
  bad.decide();
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.value, 1e-2);
  auto good = check_tweedie(pmf, 1.0, grid, 1e-10);
  good.threshold = 1e-8;
  good.decide();
  EXPECT_TRUE(good.pass);
}

TEST(Checks, KolmogorovForwardIsSecondOrder) {
  const auto r = check_kolmogorov_forward(synthetic_target("zip").build(), 1.0, 0.5,
                                          std::vector<double>{1e-3, 5e-4, 2.5e-4});
  EXPECT_GT(r.value, 1.9);
  EXPECT_LT(r.value, 2.1);
}

TEST(Checks, DecideDirections) {
  CheckResult r;
  r.value = 2.0;
  r.threshold = 1.9;
  r.at_least = true;
  r.decide();
  EXPECT_TRUE(r.pass);
  r.at_least = false;
  r.decide();
  EXPECT_FALSE(r.pass);
  r.threshold.reset();
  r.decide();
  EXPECT_TRUE(r.pass);
}

TEST(Thresholds, Defaults) {
  EXPECT_EQ(default_threshold("tweedie", Family::Poisson), 1e-8);
  EXPECT_EQ(default_threshold("tweedie", Family::Zipf), 1e-6);
  EXPECT_NEAR(*default_threshold("w1", Family::Poisson), 0.15, 1e-12);
  EXPECT_FALSE(default_threshold("nll_mean", Family::Poisson).has_value());
}

DiagnosticsConfig quick_config() {
  DiagnosticsConfig c;
  c.sampler.n_chains = 2000;
  c.sampler.n_steps = 200;
  c.nll_samples = 500;
  c.seed = 3;
  return c;
}

TEST(Suite, OracleOnPoissonPasses) {
  const auto pmf = synthetic_target("poisson").build();
  const OracleDenoiser den(pmf, 1.0);
  const auto rep = run_suite(pmf, den, quick_config());
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.value << " " << c.error;
  EXPECT_TRUE(rep.all_pass());
  ASSERT_NE(rep.find("nll_mean"), nullptr);
  EXPECT_NEAR(rep.find("nll_mean")->value, 2.2043952, 0.1);
  const auto j = to_json(rep);
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["threshold_table_version"], kThresholdTableVersion);
}

TEST(Suite, SelectedChecksAndOverrides) {
  const auto pmf = synthetic_target("zip").build();
  const OracleDenoiser den(pmf, 1.0);
  DiagnosticsConfig c = quick_config();
  c.enabled_checks = {"marginal", "tweedie"};
  c.thresholds["marginal"] = 0.0;
  const auto rep = run_suite(pmf, den, c);
  ASSERT_EQ(rep.checks.size(), 2u);
  EXPECT_FALSE(rep.find("marginal")->pass);
  EXPECT_TRUE(rep.find("tweedie")->pass);
  EXPECT_FALSE(rep.all_pass());
  c.enabled_checks = {"nonsense"};
  EXPECT_THROW(run_suite(pmf, den, c), ParameterError);
}

TEST(Suite, BridgeChiSquaredUnderOracle) {
  const auto pmf = make_target(Family::Poisson, {3.0}, 40);
  SamplerConfig s;
  s.n_chains = 20000;
  s.n_steps = 200;
  s.scheme = Scheme::TauLeap;
  s.seed = 4;
  const auto r = check_bridge_chi2(pmf, s, 1000);
  EXPECT_GE(r.value, 0.01);
}

}  // namespace
}  // namespace binflow
