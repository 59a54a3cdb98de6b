// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"binflow: Binomial-flow discrete diffusion"};
  app.set_version_flag("--version", std::string(BINFLOW_VERSION));
  app.require_subcommand(1);

  binflow::cli::Options opts;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool model) {
    sub->add_option("--config", opts.config, "experiment config (JSON)");
    sub->add_option("--out", opts.out, "output base directory (default io.output_dir)");
    sub->add_option("--seed", seed, "override the global seed");
    if (model) {
      sub->add_option("--checkpoint", opts.checkpoint, "trained model (.bnfw)");
      sub->add_flag("--oracle", opts.oracle, "use the exact intensity of the config target");
    }
  };
  add_common(app.add_subcommand("train", "train a denoiser, write checkpoint and loss history"),
             false);
  add_common(app.add_subcommand("sample", "simulate chains, write samples CSV and summary"), true);
  add_common(app.add_subcommand("nll", "negative log-likelihood over an evaluation set"), true);
  add_common(app.add_subcommand("validate", "run the diagnostics suite, exit 3 on failure"), true);
  auto* report = app.add_subcommand("report", "aggregate run directories into tables");
  report->add_option("--out,dir", opts.out, "directory holding run subdirectories");
  report->add_option("--config", opts.config, "config whose io.output_dir is scanned");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : binflow::cli::kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) {
    const CLI::Option* seed_opt = sub->get_option_no_throw("--seed");
    if (seed_opt && seed_opt->count()) opts.seed = seed;
    return binflow::cli::run_command(sub->get_name(), opts, std::cerr);
  }
  return binflow::cli::kExitUsage;
}
