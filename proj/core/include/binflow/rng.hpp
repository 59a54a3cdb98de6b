// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace binflow {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t z) noexcept;

/// Seed of the `index`-th independent stream derived from `seed`.
///
/// Streams are a pure function of (seed, index): chain i of a sampler run
/// always receives splitmix64(seed ^ splitmix64(i + 1)), independent of how
/// many chains run or in which order.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Small-state SplitMix64 generator for per-chain streams where keeping one
/// Mersenne Twister per chain would be too large.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  explicit StreamEngine(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t z = state_;
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64(z);
  }

 private:
  std::uint64_t state_;
};

/// Uniform double in [0, 1) from the top 53 bits.
template <class Engine>
double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(stream_seed(seed, index));
}

}  // namespace binflow
