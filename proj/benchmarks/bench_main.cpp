// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <limits>

#include "binflow/likelihood.hpp"
#include "binflow/mlp.hpp"
#include "binflow/poisson_calculus.hpp"
#include "binflow/sampler.hpp"
#include "binflow/train.hpp"

using namespace binflow;

namespace {

const char* kTargets[] = {"poisson", "poisson_mixture", "zip", "nbm", "bnb", "zipf", "yule_simon"};

void BM_FlowTables(benchmark::State& state) {
  const auto pmf = synthetic_target(kTargets[state.range(0)]).build();
  for (auto _ : state) benchmark::DoNotOptimize(FlowTables(pmf, 1.0));
  state.SetLabel(kTargets[state.range(0)]);
}
BENCHMARK(BM_FlowTables)->DenseRange(0, 6);

void BM_IntensityRow(benchmark::State& state) {
  const FlowTables tab(synthetic_target("poisson_mixture").build(), 1.0);
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(intensity_row(tab, t));
    t = t < 0.9 ? t + 1e-3 : 0.1;
  }
}
BENCHMARK(BM_IntensityRow);

void BM_MlpForward(benchmark::State& state) {
  const MlpDenoiser m(MlpArch{}, DataScaling{5.0, 5.0, 1.0}, 1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  std::vector<double> t(batch, 0.5), x(batch);
  for (std::size_t i = 0; i < batch; ++i) x[i] = static_cast<double>(i % 12);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward_batch(t, x));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_MlpForward)->Arg(128)->Arg(1024);

void BM_TrainStepGradient(benchmark::State& state) {
  const MlpArch arch;
  const DataScaling sc{5.0, 5.0, 1.0};
  const auto p = mlp_init<float>(arch, 3);
  AlignedVector<float> g(p.size());
  MlpCache<float> cache;
  std::vector<double> t(128), xt(128), xT(128);
  for (int i = 0; i < 128; ++i) {
    t[i] = (i + 0.5) / 128.0;
    xT[i] = i % 11;
    xt[i] = (i % 11) / 2;
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(loss_and_gradient<float>(
        arch, sc, static_cast<LossKind>(state.range(0)), WeightKind::Constant, p, t, xt, xT, g,
        cache));
  state.SetLabel(state.range(0) == 0 ? "quadratic" : "entropic");
}
BENCHMARK(BM_TrainStepGradient)->Arg(0)->Arg(1);

void BM_SampleOracle(benchmark::State& state) {
  const IntensityRate rates(FlowTables(synthetic_target("zip").build(), 1.0));
  SamplerConfig c;
  c.scheme = static_cast<Scheme>(state.range(0));
  c.n_chains = 1000;
  c.n_steps = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(sample_chains(rates, c));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.n_chains * c.n_steps));
  state.SetLabel(state.range(0) == 0 ? "euler" : "tau_leap");
}
BENCHMARK(BM_SampleOracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleLearned(benchmark::State& state) {
  const MlpDenoiser m(MlpArch{}, DataScaling{5.0, 5.0, 1.0}, 1);
  SamplerConfig c;
  c.n_chains = 1000;
  c.n_steps = 100;
  for (auto _ : state) benchmark::DoNotOptimize(sample_chains(m, c));
}
BENCHMARK(BM_SampleLearned)->Unit(benchmark::kMillisecond);

void BM_NllQuadrature(benchmark::State& state) {
  const IntensityRate rates(FlowTables(synthetic_target("poisson_mixture").build(), 1.0));
  for (auto _ : state) {
    NllQuadrature q(rates, static_cast<int>(state.range(0)));
    for (std::int64_t x = 0; x <= 140; x += 7) benchmark::DoNotOptimize(q(x));
  }
}
BENCHMARK(BM_NllQuadrature)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
