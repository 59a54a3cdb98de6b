// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration: one JSON document, validated field by field.

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "binflow/diagnostics.hpp"
#include "binflow/likelihood.hpp"
#include "binflow/mlp.hpp"
#include "binflow/sampler.hpp"
#include "binflow/targets.hpp"
#include "binflow/train.hpp"

namespace binflow::cli {

struct TargetBlock {
  std::string name;  // reference problem name, empty for explicit family/params
  Family family = Family::Poisson;
  std::vector<double> params;
  std::vector<double> weights;  // custom tables only
  int support_cap = 0;
  std::optional<double> max_tail_mass;

  std::string label() const;
  TargetPmf build() const;
};

struct LikelihoodBlock {
  NllMode mode = NllMode::Quadrature;
  int n_nodes = 256;
  int n_time = 256;
  int n_inner = 16;
  std::size_t n_samples = 10000;
  std::string eval_set;  // CSV path; empty draws from the target
};

struct IoBlock {
  std::string output_dir = "runs";
  bool trajectory = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  double final_time = 1.0;
  std::size_t dim = 1;
  TargetBlock target;
  MlpArch model;
  std::size_t n_train = 50000;
  TrainConfig train;
  SamplerConfig sampler;
  LikelihoodBlock likelihood;
  DiagnosticsConfig diagnostics;
  IoBlock io;

  /// Re-derives every sub-seed from `seed`.
  void set_seed(std::uint64_t s);
};

/// Throws ConfigError carrying the JSON field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved configuration (defaults filled in).
nlohmann::json resolved_json(const ExperimentConfig& cfg);

/// 16 hex digits; independent of seed, io block and notes.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace binflow::cli
