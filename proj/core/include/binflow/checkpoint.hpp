// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Binary model checkpoints.
//
// Layout (little-endian):
//   "BNFW" | u32 version | u32 dim, width, depth, time_dim | u8 precondition, 3 x u8 pad
//   f64 mu_data, sigma2_data, final_time | u64 seed | u32 n, n bytes config digest
//   u64 n_params | n_params x f32 weights | n_params x f32 EMA weights
//   u64 FNV-1a hash of all preceding bytes

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binflow/mlp.hpp"

namespace binflow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept;

std::vector<std::uint8_t> serialize_model(const MlpDenoiser& model);
/// `expected_dim` = 0 accepts any dimension.
MlpDenoiser deserialize_model(const std::vector<std::uint8_t>& bytes, std::size_t expected_dim = 0);

void save_model(const MlpDenoiser& model, const std::string& path);
MlpDenoiser load_model(const std::string& path, std::size_t expected_dim = 0);

}  // namespace binflow
