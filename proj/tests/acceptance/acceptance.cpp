// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion.
//   --fast     criteria 1-5 and 7-11 (exact-flow identities, oracle sampling, gradients)
//   --learned  criterion 6 (trains four denoisers with the reference recipe)

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "binflow/diagnostics.hpp"
#include "binflow/error.hpp"
#include "binflow/likelihood.hpp"
#include "binflow/losses.hpp"
#include "binflow/mlp.hpp"
#include "binflow/poisson_calculus.hpp"
#include "binflow/rng.hpp"
#include "binflow/sampler.hpp"
#include "binflow/train.hpp"

using namespace binflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const std::string& title, double limit_s,
               const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %2d  %s: %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              o.detail.c_str(), secs, in_time ? "" : (", limit " + sci(limit_s) + " s").c_str());
  std::fflush(stdout);
}

bool heavy(Family f) { return f == Family::BNB || f == Family::Zipf || f == Family::YuleSimon; }

std::vector<double> tenths() {
  std::vector<double> g;
  for (int k = 1; k <= 9; ++k) g.push_back(k / 10.0);
  return g;
}

Outcome tweedie_all() {
  double worst_light = 0.0, worst_heavy = 0.0;
  bool ok = true;
  for (const auto& s : synthetic_targets()) {
    const auto r = check_tweedie(s.build(), 1.0, default_t_grid(), 1e-10);
    const double limit = heavy(s.family) ? 1e-6 : 1e-8;
    ok = ok && r.error.empty() && r.value < limit;
    (heavy(s.family) ? worst_heavy : worst_light) =
        std::max(heavy(s.family) ? worst_heavy : worst_light, r.value);
  }
  return {ok, "max residual " + sci(worst_light) + " (< 1e-8), heavy-tailed " + sci(worst_heavy) +
                  " (< 1e-6)"};
}

Outcome marginal_all() {
  double worst = 0.0;
  for (const auto& s : synthetic_targets())
    worst = std::max(worst, check_marginal(s.build(), 1.0, tenths()).value);
  return {worst < 1e-10, "max L1 " + sci(worst) + " (< 1e-10)"};
}

Outcome nll_identity_all() {
  double worst = 0.0;
  for (const auto& s : synthetic_targets())
    worst = std::max(worst, check_nll_identity(s.build(), 1.0, 256, 1e-6).value);
  return {worst < 1e-3, "max |nll + log mu| " + sci(worst) + " (< 1e-3)"};
}

double oracle_mean_nll(const std::string& name, std::uint64_t seed) {
  const auto pmf = synthetic_target(name).build();
  const IntensityRate rates(FlowTables(pmf, 1.0));
  NllQuadrature quad(rates);
  std::vector<double> v;
  for (const auto x : sample_target(pmf, 10000, seed)) v.push_back(quad(x).value);
  return summarize_nll(v).mean;
}

Outcome oracle_nll_reference() {
  const double p = oracle_mean_nll("poisson", 11);
  const double z = oracle_mean_nll("zip", 12);
  const double y = oracle_mean_nll("yule_simon", 13);
  const bool ok = std::abs(p - 2.21) <= 0.03 && std::abs(z - 1.25) <= 0.03 &&
                  std::abs(y - 1.22) <= 0.05;
  return {ok, "Poisson " + sci(p) + " (2.21 +- 0.03), ZIP " + sci(z) + " (1.25 +- 0.03), " +
                  "Yule-Simon " + sci(y) + " (1.22 +- 0.05)"};
}

double law_error(const TargetPmf& pmf, Scheme scheme, int steps) {
  const IntensityRate rates(FlowTables(pmf, 1.0));
  SamplerConfig c;
  c.scheme = scheme;
  c.n_steps = steps;
  const auto law = scheme_law(rates, c, pmf.size() + 60);
  return w1_pmf(law.back(), pmf.probs());
}

Outcome oracle_sampling() {
  const auto pmf = synthetic_target("poisson").build();
  const IntensityRate rates(FlowTables(pmf, 1.0));
  SamplerConfig c;
  c.scheme = Scheme::TauLeap;
  c.n_steps = 1000;
  c.n_chains = 100000;
  c.seed = 5;
  const double w1 = w1_empirical(sample_chains(rates, c).final_states, pmf);

  // tau-leaping is exact for the constant Poisson intensity, so the step
  // dependence is measured on the exact laws of both schemes
  const double tau_1000 = law_error(pmf, Scheme::TauLeap, 1000);
  const double eu_500 = law_error(pmf, Scheme::Euler, 500);
  const double eu_1000 = law_error(pmf, Scheme::Euler, 1000);
  const double eu_2000 = law_error(pmf, Scheme::Euler, 2000);
  const auto zip = synthetic_target("zip").build();
  const double tz_500 = law_error(zip, Scheme::TauLeap, 500);
  const double tz_1000 = law_error(zip, Scheme::TauLeap, 1000);
  const double tz_2000 = law_error(zip, Scheme::TauLeap, 2000);
  auto halves = [](double a, double b) { return a / b > 1.8 && a / b < 2.2; };
  const bool ok = w1 <= 0.15 && tau_1000 < 1e-4 && halves(eu_500, eu_1000) &&
                  halves(eu_1000, eu_2000) && halves(tz_500, tz_1000) && halves(tz_1000, tz_2000);
  std::ostringstream os;
  os << "W1 " << sci(w1) << " (<= 0.15); exact-law W1 tau-leap Poisson " << sci(tau_1000)
     << "; Euler Poisson 500/1000/2000 steps " << sci(eu_500) << "/" << sci(eu_1000) << "/"
     << sci(eu_2000) << " (ratios " << sci(eu_500 / eu_1000) << ", " << sci(eu_1000 / eu_2000)
     << "); tau-leap ZIP " << sci(tz_500) << "/" << sci(tz_1000) << "/" << sci(tz_2000)
     << " (ratios " << sci(tz_500 / tz_1000) << ", " << sci(tz_1000 / tz_2000) << ")";
  return {ok, os.str()};
}

Outcome kl_identity() {
  const auto p3 = make_target(Family::Poisson, {3.0}, 40);
  const auto zip = synthetic_target("zip").build();
  const auto p1 = make_target(Family::Poisson, {1.0}, 40);
  const auto a = check_kl_identity(p3, 1.0, 256);
  const auto b = check_kl_identity(zip, 1.0, 256);
  const auto c = check_kl_identity(p1, 1.0, 256);
  const double kl_exact = 3.0 * std::log(3.0) - 2.0;
  const double rhs = a.details["relative_entropy"].get<double>();
  const double pi1 = c.details["path_integral"].get<double>();
  const bool ok = a.value < 1e-3 && b.value < 1e-3 && c.value < 1e-3 &&
                  std::abs(rhs - kl_exact) < 1e-10 && std::abs(pi1) < 1e-3;
  return {ok, "Poisson(3) " + sci(a.value) + ", ZIP " + sci(b.value) + ", pi_1 " + sci(c.value) +
                  " (path integral " + sci(pi1) + ") (< 1e-3)"};
}

Outcome time_reversal_all() {
  double worst = 0.0;
  for (const auto& s : synthetic_targets())
    worst = std::max(worst, check_time_reversal(s.build(), 1.0, default_t_grid()).value);
  return {worst < 1e-9, "max residual " + sci(worst) + " (< 1e-9)"};
}

Outcome kolmogorov_all() {
  double worst = std::numeric_limits<double>::infinity();
  const std::vector<double> dts{1e-3, 5e-4, 2.5e-4};
  for (const auto& s : synthetic_targets())
    worst = std::min(worst, check_kolmogorov_forward(s.build(), 1.0, 0.5, dts).value);
  return {worst >= 1.9, "min order " + sci(worst) + " (>= 1.9)"};
}

struct Synthetic {
  std::string name;
  double mu, s2;
  std::function<std::int64_t(Rng&)> draw;
};

Outcome preconditioning() {
  const auto zip = synthetic_target("zip").build();
  const Moments zm = moments(zip);
  std::vector<Synthetic> sets;
  sets.push_back({"Bin(8,1/2)", 4.0, 2.0, [](Rng& r) {
                    return std::binomial_distribution<std::int64_t>(8, 0.5)(r);
                  }});
  sets.push_back({"ZIP", zm.mean, zm.variance, [&zip](Rng& r) {
                    return sample_target(zip, 1, r)[0];
                  }});
  double lo = 1e9, hi = -1e9;
  Rng rng(31);
  const std::size_t n = 400000;
  for (const auto& s : sets) {
    std::vector<std::int64_t> x1(n);
    for (auto& v : x1) v = s.draw(rng);
    for (double t : {0.25, 0.5, 0.75}) {
      const PrecondCoeffs c = precond_coeffs(t, s.mu, s.s2, 0.0);
      double a1 = 0, a2 = 0, f1 = 0, f2 = 0;
      for (const auto x : x1) {
        const auto xt = std::binomial_distribution<std::int64_t>(x, t)(rng);
        const double in = c.c_in * static_cast<double>(xt) + c.s_in;
        const double f = (static_cast<double>(x) - c.c_skip * static_cast<double>(xt)) / c.c_out;
        a1 += in, a2 += in * in, f1 += f, f2 += f * f;
      }
      const double dn = static_cast<double>(n);
      const double vin = (a2 - a1 * a1 / dn) / (dn - 1), vf = (f2 - f1 * f1 / dn) / (dn - 1);
      lo = std::min({lo, vin, vf});
      hi = std::max({hi, vin, vf});
    }
  }

  // grid search of the affine baseline, mu = 4, s2 = 2, t = 1/2, on [0,3]^2 at 1e-3
  const double t = 0.5, mu = 4.0;
  const std::size_t m = 10000000;
  double s11 = 0, s1t = 0, stt = 0, s1 = 0, st = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = std::binomial_distribution<std::int64_t>(8, 0.5)(rng);
    const auto xt = std::binomial_distribution<std::int64_t>(x, t)(rng);
    const double a = static_cast<double>(x), b = static_cast<double>(xt);
    s11 += a * a, s1t += a * b, stt += b * b, s1 += a, st += b;
  }
  const double dm = static_cast<double>(m);
  s11 /= dm, s1t /= dm, stt /= dm, s1 /= dm, st /= dm;
  // E|X1 - bs Xt - bo mu|^2 from the sample moments
  auto objective = [&](double bs, double bo) {
    return s11 + bs * bs * stt + bo * bo * mu * mu - 2 * bs * s1t - 2 * bo * mu * s1 +
           2 * bs * bo * mu * st;
  };
  double best = std::numeric_limits<double>::infinity(), bs_best = 0, bo_best = 0;
  for (int i = 0; i <= 3000; ++i)
    for (int j = 0; j <= 3000; ++j) {
      const double bs = i * 1e-3, bo = j * 1e-3;
      const double v = objective(bs, bo);
      if (v < best) best = v, bs_best = bs, bo_best = bo;
    }
  const AffineBaseline cf = baseline_affine(t, 4.0, 2.0);
  const double dev = std::max(std::abs(bs_best - cf.b_skip), std::abs(bo_best - cf.b_out));
  const bool ok = lo >= 0.9 && hi <= 1.1 && dev <= 2e-3;
  return {ok, "Var[c_in X_t], Var[F_target] in [" + sci(lo) + ", " + sci(hi) +
                  "] (within [0.9, 1.1]); affine grid optimum (" + sci(bs_best) + ", " +
                  sci(bo_best) + ") vs closed form (" + sci(cf.b_skip) + ", " + sci(cf.b_out) +
                  "), deviation " + sci(dev) + " (<= 2e-3)"};
}

double gradient_error(bool precondition, LossKind loss, std::uint64_t seed) {
  MlpArch a;
  a.width = 8;
  a.depth = 3;
  a.time_dim = 8;
  a.precondition = precondition;
  const DataScaling sc{2.0, 6.0, 1.0};
  auto p = mlp_init<double>(a, seed);
  // small head weights keep the entropic rates away from the floor
  const std::size_t head = a.dim * a.width + a.dim;
  for (std::size_t k = p.size() - head; k < p.size(); ++k) p[k] *= 0.05;
  const std::vector<double> t{0.1, 0.4, 0.7, 0.9}, xt{1, 2, 3, 4}, xT{3, 6, 5, 6};
  MlpCache<double> cache;
  AlignedVector<double> g(p.size());
  const auto lv = loss_and_gradient<double>(a, sc, loss, WeightKind::Constant, p, t, xt, xT, g,
                                            cache);
  if (lv.floor_events) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto q = p;
    auto at = [&](double step) {
      q[i] = p[i] + step;
      return loss_and_gradient<double>(a, sc, loss, WeightKind::Constant, q, t, xt, xT, {}, cache)
          .loss;
    };
    // five-point central difference
    const double h = 1e-4;
    const double fd = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-6}));
  }
  return worst;
}

Outcome gradients() {
  double worst = 0.0;
  std::ostringstream os;
  std::uint64_t seed = 1;
  for (bool pre : {false, true})
    for (LossKind l : {LossKind::Quadratic, LossKind::Entropic}) {
      const double e = gradient_error(pre, l, seed++);
      worst = std::max(worst, e);
      os << to_string(l) << (pre ? "+precond " : " ") << sci(e) << "; ";
    }
  return {worst < 1e-4, os.str() + "max " + sci(worst) + " (< 1e-4)"};
}

struct LearnedTarget {
  std::string name;
  double nll_limit;  // NaN when not checked
  double w1_limit;
};

Outcome learned(int epochs, std::uint64_t seed) {
  const double none = std::numeric_limits<double>::quiet_NaN();
  const std::vector<LearnedTarget> targets{{"poisson", 2.45, 3 * 0.08},
                                           {"zip", 1.40, 3 * 0.09},
                                           {"zipf", none, 3 * 0.18},
                                           {"yule_simon", none, 3 * 0.11}};
  bool ok = true;
  std::ostringstream os;
  double slowest = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& lt = targets[k];
    const auto t0 = std::chrono::steady_clock::now();
    const auto pmf = synthetic_target(lt.name).build();
    const Moments mom = moments(pmf);
    const auto data = sample_target(pmf, 50000, stream_seed(seed, 10 + k));
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = stream_seed(seed, 20 + k);
    const auto res =
        train(MlpDenoiser(MlpArch{}, DataScaling{mom.mean, mom.variance, 1.0}, cfg.seed), data, cfg);

    const DenoiserRate rates(res.model, -std::numeric_limits<double>::infinity());
    NllQuadrature quad(rates);
    std::vector<double> v;
    for (const auto x : sample_target(pmf, 10000, stream_seed(seed, 30 + k)))
      v.push_back(quad(x).value);
    const NllSummary nll = summarize_nll(v);

    SamplerConfig sc;
    sc.n_chains = 10000;
    sc.n_steps = 1000;
    sc.scheme = Scheme::Euler;
    sc.seed = stream_seed(seed, 40 + k);
    const auto samples = sample_chains(res.model, sc);
    const double w1 = w1_empirical(samples.final_states, pmf);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);

    const bool nll_ok = std::isnan(lt.nll_limit) || nll.mean <= lt.nll_limit;
    const bool w1_ok = w1 <= lt.w1_limit;
    const bool t_ok = secs <= 1800.0;
    ok = ok && nll_ok && w1_ok && t_ok;
    os << lt.name << ": NLL " << sci(nll.mean) << " +- " << sci(nll.std_error);
    if (!std::isnan(lt.nll_limit)) os << " (<= " << lt.nll_limit << ")";
    os << ", W1 " << sci(w1) << " (<= " << sci(lt.w1_limit) << "), " << sci(secs) << " s; ";
    std::printf("  %s: final loss %.4f, NLL %.4f +- %.4f (floors %llu), W1 %.4f, clamps %llu, "
                "%.0f s\n",
                lt.name.c_str(), res.history.empty() ? 0.0 : res.history.back().mean_loss,
                nll.mean, nll.std_error, static_cast<unsigned long long>(quad.floor_events()), w1,
                static_cast<unsigned long long>(samples.clamp_events), secs);
    std::fflush(stdout);
  }
  if (epochs != TrainConfig{}.epochs) os << "reduced run with " << epochs << " epochs; ";
  os << "slowest target " << sci(slowest) << " s (< 1800)";
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binflow acceptance criteria"};
  bool fast = false, learned_run = false;
  int epochs = TrainConfig{}.epochs;
  std::uint64_t seed = 2026;
  app.add_flag("--fast", fast, "criteria 1-5 and 7-11");
  app.add_flag("--learned", learned_run, "criterion 6");
  app.add_option("--epochs", epochs, "training epochs for criterion 6");
  app.add_option("--seed", seed, "seed for criterion 6");
  CLI11_PARSE(app, argc, argv);
  if (!fast && !learned_run) fast = learned_run = true;

  if (fast) {
    criterion(1, "discrete Tweedie identity", 30, tweedie_all);
    criterion(2, "marginal consistency", 10, marginal_all);
    criterion(3, "exact-likelihood identity", 60, nll_identity_all);
    criterion(4, "oracle NLL reproduction", 300, oracle_nll_reference);
    criterion(5, "oracle sampling fidelity", 120, oracle_sampling);
  }
  if (learned_run)
    criterion(6, "learned-model reproduction", 4 * 1800, [&] { return learned(epochs, seed); });
  if (fast) {
    criterion(7, "KL identity", 10, kl_identity);
    criterion(8, "time-reversal ratio", 5, time_reversal_all);
    criterion(9, "Kolmogorov forward convergence", 10, kolmogorov_all);
    criterion(10, "preconditioning contracts", 60, preconditioning);
    criterion(11, "gradient correctness", 10, gradients);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
