// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

// Subcommands of the binflow tool. Each returns a process exit code.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace binflow::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2, kExitValidation = 3 };

struct Options {
  std::string config;
  std::string checkpoint;
  std::string out;
  bool oracle = false;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const Options& opts, std::ostream& log);
int cmd_sample(const Options& opts, std::ostream& log);
int cmd_nll(const Options& opts, std::ostream& log);
int cmd_validate(const Options& opts, std::ostream& log);
int cmd_report(const Options& opts, std::ostream& log);

/// Dispatches by name and maps exceptions to exit codes: configuration and
/// parameter problems give 1, everything else 2.
int run_command(const std::string& name, const Options& opts, std::ostream& log);

/// Reads integer vectors from CSV. With a header, columns x / x_final (d = 1)
/// or x_0..x_{d-1} are used; without one every row must have d fields.
/// Errors name the line.
std::vector<std::int64_t> read_eval_set(std::istream& in, std::size_t dim,
                                        const std::string& source);

/// Directory for one run: <base>/<digest>-s<seed>; oracle runs add "-oracle".
std::string run_directory(const std::string& base, const std::string& digest, std::uint64_t seed);

}  // namespace binflow::cli
