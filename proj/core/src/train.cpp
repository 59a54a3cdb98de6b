// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "binflow/error.hpp"
#include "binflow/poisson_calculus.hpp"
#include "binflow/rng.hpp"

namespace binflow {

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::Quadratic ? "quadratic" : "entropic";
}

std::string_view to_string(WeightKind kind) noexcept {
  switch (kind) {
    case WeightKind::SyntheticInvSqrt: return "synthetic_inv_sqrt";
    case WeightKind::PrecondW2: return "precond_w2";
    case WeightKind::Constant: return "constant";
  }
  return "?";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "quadratic") return LossKind::Quadratic;
  if (name == "entropic") return LossKind::Entropic;
  throw ParameterError("unknown loss '" + std::string(name) + "'");
}

WeightKind weight_kind_from_string(std::string_view name) {
  if (name == "synthetic_inv_sqrt") return WeightKind::SyntheticInvSqrt;
  if (name == "precond_w2") return WeightKind::PrecondW2;
  if (name == "constant") return WeightKind::Constant;
  throw ParameterError("unknown weight function '" + std::string(name) + "'");
}

double training_weight(WeightKind kind, double s, const DataScaling& scaling) {
  switch (kind) {
    case WeightKind::SyntheticInvSqrt: return weight_synthetic(std::min(s, kWeightTimeCap));
    case WeightKind::PrecondW2: return precond_coeffs(s, scaling.mu_data, scaling.sigma2_data).w_sq;
    case WeightKind::Constant: return 1.0;
  }
  return 1.0;
}

namespace {

// Per-entry loss and derivative w.r.t. m.
struct EntryLoss {
  double value;
  double dm;
  bool floored;
};

EntryLoss entry_loss(LossKind kind, double m, double xt, double xT, double tau) {
  if (kind == LossKind::Quadratic) {
    const double r = xT - m;
    return {r * r, -2.0 * r, false};
  }
  const double a = (xT - xt) / tau;
  double rate = (m - xt) / tau;
  bool floored = false;
  if (!(rate >= kRateFloor)) {
    rate = kRateFloor;
    floored = true;
  }
  return {bregman_entropic_term(a, rate), (1.0 - a / rate) / tau, floored};
}

}  // namespace

template <class S>
LossValue loss_and_gradient(const MlpArch& arch, const DataScaling& scaling, LossKind loss,
                            WeightKind weight, std::span<const S> params,
                            std::span<const double> t, std::span<const double> x_t,
                            std::span<const double> x_final, std::span<S> grad,
                            MlpCache<S>& cache) {
  const std::size_t d = arch.dim;
  const std::size_t batch = t.size();
  if (x_final.size() != x_t.size())
    throw ParameterError("x_t and x_final lengths differ");
  if (batch == 0) throw ParameterError("empty batch");
  const OutputMap map = prepare_inputs(arch, scaling, t, x_t, cache);
  mlp_forward<S>(arch, params, cache);

  LossValue out;
  AlignedVector<S> gout(d * batch);
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double s = t[b] / scaling.final_time;
    const double w = training_weight(weight, s, scaling);
    const double tau = scaling.final_time - t[b];
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = b * d + i;
      const double m = map.offset[k] + map.scale[k] * static_cast<double>(cache.output[k]);
      const EntryLoss e = entry_loss(loss, m, x_t[k], x_final[k], tau);
      out.loss += w * e.value * inv_b;
      out.floor_events += e.floored ? 1 : 0;
      gout[k] = static_cast<S>(w * e.dm * map.scale[k] * inv_b);
    }
  }
  if (!grad.empty()) mlp_backward<S>(arch, params, cache, gout, grad);
  return out;
}

template LossValue loss_and_gradient<float>(const MlpArch&, const DataScaling&, LossKind,
                                            WeightKind, std::span<const float>,
                                            std::span<const double>, std::span<const double>,
                                            std::span<const double>, std::span<float>,
                                            MlpCache<float>&);
template LossValue loss_and_gradient<double>(const MlpArch&, const DataScaling&, LossKind,
                                             WeightKind, std::span<const double>,
                                             std::span<const double>, std::span<const double>,
                                             std::span<const double>, std::span<double>,
                                             MlpCache<double>&);

namespace {

template <class S>
void ema_update_impl(std::span<S> shadow, std::span<const S> current, double decay) {
  if (shadow.size() != current.size())
    throw ParameterError("ema_update: shape mismatch (" + std::to_string(shadow.size()) + " vs " +
                         std::to_string(current.size()) + ")");
  if (!(decay >= 0.0 && decay <= 1.0)) throw ParameterError("ema decay must be in [0, 1]");
  const S a = static_cast<S>(decay);
  const S b = static_cast<S>(1.0 - decay);
  for (std::size_t i = 0; i < shadow.size(); ++i) shadow[i] = a * shadow[i] + b * current[i];
}

}  // namespace

void ema_update(std::span<float> shadow, std::span<const float> current, double decay) {
  ema_update_impl(shadow, current, decay);
}

void ema_update(std::span<double> shadow, std::span<const double> current, double decay) {
  ema_update_impl(shadow, current, decay);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
  if (batch_size <= 0) throw ParameterError("batch_size must be > 0");
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw ParameterError("grad_clip_norm must be > 0");
  if (!(ema_decay > 0.0 && ema_decay < 1.0)) throw ParameterError("ema_decay must be in (0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ParameterError("adam betas must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ParameterError("adam_eps must be > 0");
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
  if (noise_schedule.mode == NoiseSchedule::Mode::TruncatedGaussianSigma &&
      !(noise_schedule.gamma_sigma > 0.0))
    throw ParameterError("gamma_sigma must be > 0");
  if (loss == LossKind::Entropic && weight_fn == WeightKind::PrecondW2)
    throw ParameterError("entropic loss cannot be combined with the precond_w2 weight");
}

TrainResult train(MlpDenoiser model, std::span<const std::int64_t> data, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  cfg.validate();
  const MlpArch& arch = model.arch();
  const std::size_t d = arch.dim;
  if (data.size() % d != 0)
    throw ParameterError("data length " + std::to_string(data.size()) +
                         " is not a multiple of dim " + std::to_string(d));
  if (std::abs(model.scaling().final_time - cfg.final_time) > 1e-12)
    throw ParameterError("model and training config disagree on T");
  for (const auto v : data)
    if (v < 0) throw ParameterError("training data must be non-negative");
  const std::size_t n = data.size() / d;
  const double T = cfg.final_time;

  TrainResult result{std::move(model), {}, 0};
  MlpDenoiser& mdl = result.model;
  AlignedVector<float>& theta = mdl.params();
  AlignedVector<float>& ema = mdl.ema_params();
  const std::size_t np = theta.size();
  AlignedVector<float> grad(np), m1(np, 0.0f), m2(np, 0.0f);
  MlpCache<float> cache;

  Rng rng(stream_seed(cfg.seed, 0x7472616eULL));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> tb, xt, xT;
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs && n > 0; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    double loss_sum = 0.0;
    std::uint64_t floors = 0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bsz = stop - start;
      tb.resize(bsz);
      xt.resize(bsz * d);
      xT.resize(bsz * d);
      for (std::size_t b = 0; b < bsz; ++b) {
        const NoiseLevel lvl = sample_noise_level(cfg.noise_schedule, rng);
        const double s = std::min(lvl.t, kWeightTimeCap);
        tb[b] = s * T;
        for (std::size_t i = 0; i < d; ++i) {
          const std::int64_t v = data[order[start + b] * d + i];
          std::binomial_distribution<std::int64_t> thin(v, s);
          xT[b * d + i] = static_cast<double>(v);
          xt[b * d + i] = static_cast<double>(thin(rng));
        }
      }
      LossValue lv;
      try {
        lv = loss_and_gradient<float>(arch, mdl.scaling(), cfg.loss, cfg.weight_fn, theta, tb, xt,
                                      xT, grad, cache);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(n_batches));
      }
      if (!std::isfinite(lv.loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(n_batches));

      double norm2 = 0.0;
      for (const float g : grad) norm2 += static_cast<double>(g) * g;
      const double norm = std::sqrt(norm2);
      const float clip = norm > cfg.grad_clip_norm ? static_cast<float>(cfg.grad_clip_norm / norm)
                                                   : 1.0f;
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      const float b1 = static_cast<float>(cfg.adam_beta1);
      const float b2 = static_cast<float>(cfg.adam_beta2);
      const float step_size = static_cast<float>(cfg.learning_rate / bc1);
      const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
      const float eps = static_cast<float>(cfg.adam_eps);
      const float wd = static_cast<float>(cfg.weight_decay);
      for (std::size_t k = 0; k < np; ++k) {
        const float g = grad[k] * clip + wd * theta[k];
        m1[k] = b1 * m1[k] + (1.0f - b1) * g;
        m2[k] = b2 * m2[k] + (1.0f - b2) * g * g;
        theta[k] -= step_size * m1[k] / (std::sqrt(m2[k]) * inv_sqrt_bc2 + eps);
      }
      ema_update(std::span<float>(ema), std::span<const float>(theta), cfg.ema_decay);

      loss_sum += lv.loss;
      floors += lv.floor_events;
      ++n_batches;
    }
    EpochStats st{epoch, loss_sum / static_cast<double>(n_batches), floors};
    result.floor_events += floors;
    result.history.push_back(st);
    if (progress) progress(st);
  }
  return result;
}

double irreducible_loss(const TargetPmf& pmf, const TrainConfig& cfg, std::size_t n_draws,
                        std::uint64_t seed) {
  cfg.validate();
  if (n_draws == 0) throw ParameterError("n_draws must be >= 1");
  const Moments mom = moments(pmf);
  const DataScaling sc{mom.mean, mom.variance, cfg.final_time};
  const double T = cfg.final_time;
  Rng rng(seed);
  const auto xs = sample_target(pmf, n_draws, rng);
  double sum = 0.0;
  for (const auto xT : xs) {
    const NoiseLevel lvl = sample_noise_level(cfg.noise_schedule, rng);
    const double s = std::min(lvl.t, kWeightTimeCap);
    std::binomial_distribution<std::int64_t> thin(xT, s);
    const std::int64_t xt = thin(rng);
    const double m = oracle_denoiser(pmf, T, s * T, xt);
    const double tau = T - s * T;
    const double w = training_weight(cfg.weight_fn, s, sc);
    sum += w * entry_loss(cfg.loss, m, static_cast<double>(xt), static_cast<double>(xT), tau).value;
  }
  return sum / static_cast<double>(n_draws);
}

void write_history_csv(std::ostream& out, std::span<const EpochStats> history) {
  out << "epoch,mean_loss,floor_events\n";
  out.precision(17);
  for (const auto& h : history) out << h.epoch << ',' << h.mean_loss << ',' << h.floor_events << '\n';
}

}  // namespace binflow
