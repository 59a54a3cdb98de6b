// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Denoiser training: weighted Bregman objective, Adam, clipping, EMA.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "binflow/losses.hpp"
#include "binflow/mlp.hpp"
#include "binflow/targets.hpp"

namespace binflow {

enum class LossKind { Quadratic, Entropic };
enum class WeightKind { SyntheticInvSqrt, PrecondW2, Constant };

std::string_view to_string(LossKind kind) noexcept;
std::string_view to_string(WeightKind kind) noexcept;
LossKind loss_kind_from_string(std::string_view name);
WeightKind weight_kind_from_string(std::string_view name);

/// Training weight at normalized time s = t/T.
double training_weight(WeightKind kind, double s, const DataScaling& scaling);

struct LossValue {
  double loss = 0.0;
  std::uint64_t floor_events = 0;
};

/// Batch objective (1/B) sum_b w(t_b) sum_i loss_i and, if `grad` is
/// non-empty, its gradient w.r.t. params.
///
/// Quadratic: |x_T - m|^2. Entropic: D((x_T - x_t)/(T - t), max(rate, floor))
/// with rate = (m - x_t)/(T - t); floored entries pass the gradient through.
/// x_t and x_final are dim x batch, column-major.
template <class Scalar>
LossValue loss_and_gradient(const MlpArch& arch, const DataScaling& scaling, LossKind loss,
                            WeightKind weight, std::span<const Scalar> params,
                            std::span<const double> t, std::span<const double> x_t,
                            std::span<const double> x_final, std::span<Scalar> grad,
                            MlpCache<Scalar>& cache);

/// shadow <- decay * shadow + (1 - decay) * current.
void ema_update(std::span<float> shadow, std::span<const float> current, double decay);
void ema_update(std::span<double> shadow, std::span<const double> current, double decay);

struct TrainConfig {
  int epochs = 300;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double grad_clip_norm = 1.0;
  double ema_decay = 0.999;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossKind loss = LossKind::Quadratic;
  WeightKind weight_fn = WeightKind::SyntheticInvSqrt;
  NoiseSchedule noise_schedule;
  double final_time = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  std::uint64_t floor_events = 0;
};

struct TrainResult {
  MlpDenoiser model;
  std::vector<EpochStats> history;
  std::uint64_t floor_events = 0;
};

using TrainProgress = std::function<void(const EpochStats&)>;

/// Runs the training loop on `data` (n x dim integers, row-major) and returns
/// the model whose EMA weights are used for inference. Throws NumericError
/// with epoch and batch on a non-finite loss.
TrainResult train(MlpDenoiser model, std::span<const std::int64_t> data, const TrainConfig& cfg,
                  const TrainProgress& progress = {});

/// Monte-Carlo value of the training objective with the exact posterior mean
/// in place of the network (d = 1).
double irreducible_loss(const TargetPmf& pmf, const TrainConfig& cfg, std::size_t n_draws,
                        std::uint64_t seed);

/// CSV with header epoch,mean_loss,floor_events.
void write_history_csv(std::ostream& out, std::span<const EpochStats> history);

}  // namespace binflow
