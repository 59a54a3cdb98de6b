// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Residual MLP denoiser with sinusoidal time features.
//
// Network F: input lift -> `depth` residual blocks u += gelu(W u + b) -> linear head.
// Input columns are [x_scaled (dim), time features (time_dim)].
//
// Two output maps:
//   raw:            m = x + (1 - s)(mu + sigma F((x - mu)/sigma, emb(s)))      s = t/T
//   preconditioned: m = c_skip x + c_out F(c_in x + s_in, emb(sigma(s)/sigma(0)))

#pragma once

#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "binflow/denoiser.hpp"

namespace binflow {

/// 64-byte aligned storage. GEMM reductions depend on buffer alignment, so
/// all network buffers use it to keep results bitwise reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

struct MlpArch {
  std::size_t dim = 1;
  std::size_t width = 256;
  std::size_t depth = 3;
  std::size_t time_dim = 128;
  bool precondition = false;

  std::size_t input_dim() const noexcept { return dim + time_dim; }
  std::size_t num_params() const noexcept;
  void validate() const;

  bool operator==(const MlpArch&) const = default;
};

/// Data constants used by both output maps.
struct DataScaling {
  double mu_data = 0.0;
  double sigma2_data = 1.0;
  double final_time = 1.0;

  void validate() const;
};

/// Sinusoidal features: (sin(w_k v), cos(w_k v)) with w_k geometric in [1, 1e4].
void time_embedding(double v, std::span<double> out);

/// Activations saved by mlp_forward for mlp_backward.
template <class Scalar>
struct MlpCache {
  std::size_t batch = 0;
  AlignedVector<Scalar> input;   // input_dim x batch
  AlignedVector<Scalar> hidden;  // (depth + 1) x width x batch
  AlignedVector<Scalar> pre;     // depth x width x batch
  AlignedVector<Scalar> output;  // dim x batch
};

/// PyTorch-default uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <class Scalar>
AlignedVector<Scalar> mlp_init(const MlpArch& arch, std::uint64_t seed, bool zero_head = false);

/// Evaluates F on cache.input (filled by the caller) and writes cache.output.
/// Throws NumericError naming the layer on a non-finite activation.
template <class Scalar>
void mlp_forward(const MlpArch& arch, std::span<const Scalar> params, MlpCache<Scalar>& cache);

/// Gradient of sum(grad_output * F) w.r.t. params, written to grad_params.
template <class Scalar>
void mlp_backward(const MlpArch& arch, std::span<const Scalar> params,
                  const MlpCache<Scalar>& cache, std::span<const Scalar> grad_output,
                  std::span<Scalar> grad_params);

/// Per-entry output map m = offset + scale * F.
struct OutputMap {
  std::vector<double> offset;
  std::vector<double> scale;
};

/// Fills cache.input for a batch (x is dim x batch, column-major; t has one
/// entry per column) and returns the output map.
template <class Scalar>
OutputMap prepare_inputs(const MlpArch& arch, const DataScaling& scaling,
                         std::span<const double> t, std::span<const double> x,
                         MlpCache<Scalar>& cache);

/// Trained denoiser with float weights and an EMA shadow used for inference.
class MlpDenoiser final : public Denoiser {
 public:
  MlpDenoiser(MlpArch arch, DataScaling scaling, std::uint64_t seed, bool zero_head = false);

  const MlpArch& arch() const noexcept { return arch_; }
  const DataScaling& scaling() const noexcept { return scaling_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& config_digest() const noexcept { return digest_; }
  void set_config_digest(std::string digest) { digest_ = std::move(digest); }

  AlignedVector<float>& params() noexcept { return params_; }
  const AlignedVector<float>& params() const noexcept { return params_; }
  AlignedVector<float>& ema_params() noexcept { return ema_; }
  const AlignedVector<float>& ema_params() const noexcept { return ema_; }

  /// Inference reads the EMA weights unless disabled.
  void set_use_ema(bool use) noexcept { use_ema_ = use; }
  bool use_ema() const noexcept { return use_ema_; }

  std::size_t dim() const override { return arch_.dim; }
  double final_time() const override { return scaling_.final_time; }
  void denoise(double t, std::span<const std::int64_t> x, std::span<double> out) const override;

  /// m(t, x) for real-valued x.
  std::vector<double> forward(double t, std::span<const double> x) const;
  /// Batched form: x is dim x batch, one time per column.
  std::vector<double> forward_batch(std::span<const double> t, std::span<const double> x) const;

 private:
  MlpArch arch_;
  DataScaling scaling_;
  std::uint64_t seed_ = 0;
  std::string digest_;
  AlignedVector<float> params_;
  AlignedVector<float> ema_;
  bool use_ema_ = true;
};

}  // namespace binflow
