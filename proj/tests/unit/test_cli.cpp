// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "binflow/checkpoint.hpp"
#include "binflow/error.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace binflow::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / "binflow_cli_tests" / info->name();
    fs::remove_all(root_);
    fs::create_directories(root_);
  }

  std::string write_config(const json& j, const std::string& name = "config.json") {
    const fs::path p = root_ / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

  static json quick(const std::string& target = "poisson") {
    return {{"seed", 7},
            {"target", {{"name", target}}},
            {"model", {{"width", 16}, {"time_dim", 8}}},
            {"train", {{"n_samples", 1000}, {"epochs", 1}}},
            {"sampler", {{"n_steps", 100}, {"n_chains", 500}}},
            {"likelihood", {{"n_samples", 200}}},
            {"diagnostics", {{"nll_samples", 200}}}};
  }

  int run(const std::string& cmd, Options o) {
    if (o.out.empty()) o.out = (root_ / "runs").string();
    log_.str("");
    return run_command(cmd, o, log_);
  }

  fs::path only_run_dir(const std::string& suffix = "") const {
    for (const auto& e : fs::directory_iterator(root_ / "runs")) {
      const std::string n = e.path().filename().string();
      if (e.is_directory() && n.size() >= suffix.size() &&
          n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0)
        return e.path();
    }
    return {};
  }

  static json read(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  fs::path root_;
  std::ostringstream log_;
};

TEST_F(CliTest, TrainTwiceGivesIdenticalCheckpoints) {
  const std::string cfg = write_config(quick());
  ASSERT_EQ(run("train", {cfg, "", (root_ / "a").string()}), kExitOk) << log_.str();
  ASSERT_EQ(run("train", {cfg, "", (root_ / "b").string()}), kExitOk) << log_.str();
  const std::string dir = "/" + config_digest(load_config(cfg)) + "-s7/";
  const std::string a = slurp(root_.string() + "/a" + dir + "model.bnfw");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(root_.string() + "/b" + dir + "model.bnfw"));
  EXPECT_EQ(slurp(root_.string() + "/a" + dir + "history.csv"),
            slurp(root_.string() + "/b" + dir + "history.csv"));
}

TEST_F(CliTest, ZeroEpochsWritesInitialWeights) {
  json j = quick();
  j["train"]["epochs"] = 0;
  ASSERT_EQ(run("train", {write_config(j)}), kExitOk) << log_.str();
  const fs::path dir = only_run_dir();
  EXPECT_EQ(slurp(dir / "history.csv"), "epoch,mean_loss,floor_events\n");
  const auto m = load_model((dir / "model.bnfw").string());
  const MlpDenoiser init(m.arch(), m.scaling(), m.seed());
  EXPECT_EQ(m.params(), init.params());
}

TEST_F(CliTest, ArtifactsCarryDigestSeedAndVersion) {
  const std::string cfg = write_config(quick());
  ASSERT_EQ(run("train", {cfg}), kExitOk);
  ASSERT_EQ(run("sample", {cfg}), kExitOk) << log_.str();
  const fs::path dir = only_run_dir();
  const std::string digest = config_digest(load_config(cfg));
  EXPECT_EQ(dir.filename().string(), digest + "-s7");
  EXPECT_EQ(load_model((dir / "model.bnfw").string()).config_digest(), digest);
  for (const char* f : {"train.json", "sample_summary.json", "config.json"}) {
    const json j = read(dir / f);
    EXPECT_EQ(j["config_digest"], digest) << f;
    EXPECT_EQ(j["binflow_version"], BINFLOW_VERSION) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "timestamps.json"));
}

TEST_F(CliTest, InvalidFamilyNamesField) {
  json j = quick();
  j["target"] = {{"family", "gaussian"}, {"params", {1.0}}, {"support_cap", 10}};
  EXPECT_EQ(run("train", {write_config(j)}), kExitUsage);
  EXPECT_NE(log_.str().find("target.family"), std::string::npos) << log_.str();
}

TEST_F(CliTest, ConfigErrorsCarryFieldPaths) {
  json j = quick();
  j["train"]["learning_rat"] = 1e-3;
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "train.learning_rat");
  }
  j = quick();
  j["sampler"]["n_steps"] = "many";
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "sampler.n_steps");
  }
  j = quick();
  j["train"]["loss"] = "entropic";
  j["train"]["weight_fn"] = "precond_w2";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = quick();
  j["_notes"] = "free text is allowed";
  j["target"]["_notes"] = "here too";
  EXPECT_NO_THROW(parse_config(j));
}

TEST_F(CliTest, DigestIgnoresSeedAndNotes) {
  json a = quick();
  json b = quick();
  b["seed"] = 99;
  b["_notes"] = "x";
  EXPECT_EQ(config_digest(parse_config(a)), config_digest(parse_config(b)));
  b["train"]["epochs"] = 2;
  EXPECT_NE(config_digest(parse_config(a)), config_digest(parse_config(b)));
}

TEST_F(CliTest, OracleSampleMeanMatchesPoisson) {
  json j = quick();
  j["sampler"] = {{"n_steps", 1000}, {"n_chains", 100000}, {"scheme", "tau_leap"}};
  Options o{write_config(j)};
  o.oracle = true;
  ASSERT_EQ(run("sample", o), kExitOk) << log_.str();
  const json s = read(only_run_dir("-oracle") / "sample_summary.json");
  EXPECT_NEAR(s["summary"]["mean"].get<double>(), 5.0, 0.05);
  EXPECT_EQ(s["summary"]["scheme"], "tau_leap");
}

TEST_F(CliTest, ZeroChainsGivesHeaderOnly) {
  json j = quick();
  j["sampler"]["n_chains"] = 0;
  Options o{write_config(j)};
  o.oracle = true;
  ASSERT_EQ(run("sample", o), kExitOk) << log_.str();
  EXPECT_EQ(slurp(only_run_dir("-oracle") / "samples.csv"), "chain_id,x_final\n");
}

TEST_F(CliTest, SchemesDifferAndAreTagged) {
  json j = quick();
  j["sampler"]["scheme"] = "euler";
  Options o{write_config(j, "euler.json"), "", (root_ / "e").string(), true};
  ASSERT_EQ(run("sample", o), kExitOk);
  j["sampler"]["scheme"] = "tau_leap";
  Options p{write_config(j, "tau.json"), "", (root_ / "t").string(), true};
  ASSERT_EQ(run("sample", p), kExitOk);
  auto find = [](const fs::path& base) {
    return fs::directory_iterator(base)->path();
  };
  const fs::path de = find(root_ / "e"), dt = find(root_ / "t");
  EXPECT_NE(slurp(de / "samples.csv"), slurp(dt / "samples.csv"));
  EXPECT_EQ(read(de / "sample_summary.json")["summary"]["scheme"], "euler");
  EXPECT_EQ(read(dt / "sample_summary.json")["summary"]["scheme"], "tau_leap");
}

TEST_F(CliTest, OracleNllOnPoissonReference) {
  json j = quick();
  j["likelihood"] = {{"mode", "quadrature"}, {"n_samples", 10000}};
  Options o{write_config(j)};
  o.oracle = true;
  ASSERT_EQ(run("nll", o), kExitOk) << log_.str();
  const json s = read(only_run_dir("-oracle") / "nll_summary.json");
  EXPECT_NEAR(s["mean"].get<double>(), 2.21, 0.03);
  EXPECT_EQ(s["n"], 10000);
}

TEST_F(CliTest, SingleSampleNll) {
  std::ofstream(root_ / "eval.csv") << "x\n5\n";
  json j = quick();
  j["likelihood"] = {{"eval_set", (root_ / "eval.csv").string()}};
  Options o{write_config(j)};
  o.oracle = true;
  ASSERT_EQ(run("nll", o), kExitOk) << log_.str();
  const json s = read(only_run_dir("-oracle") / "nll_summary.json");
  EXPECT_NEAR(s["mean"].get<double>(), 1.7403, 1e-4);
  EXPECT_EQ(s["std_error"].get<double>(), 0.0);
}

TEST_F(CliTest, EmptyEvalSetIsAnError) {
  std::ofstream(root_ / "eval.csv") << "x\n";
  json j = quick();
  j["likelihood"] = {{"eval_set", (root_ / "eval.csv").string()}};
  Options o{write_config(j)};
  o.oracle = true;
  EXPECT_EQ(run("nll", o), kExitUsage);
  EXPECT_NE(log_.str().find("empty"), std::string::npos) << log_.str();
}

TEST_F(CliTest, EvalSetParseErrorsNameTheLine) {
  std::istringstream in("x\n3\n4\nfive\n");
  try {
    read_eval_set(in, 1, "eval.csv");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("eval.csv:4"), std::string::npos) << e.what();
  }
  std::istringstream samples("chain_id,x_final\n0,3\n1,7\n");
  EXPECT_EQ(read_eval_set(samples, 1, "s"), (std::vector<std::int64_t>{3, 7}));
  std::istringstream bare("2,3\n4,5\n");
  EXPECT_EQ(read_eval_set(bare, 2, "b"), (std::vector<std::int64_t>{2, 3, 4, 5}));
}

TEST_F(CliTest, ValidateOracleOnEveryReferenceTarget) {
  for (const char* t : {"poisson", "poisson_mixture", "zip", "nbm", "bnb", "zipf", "yule_simon"}) {
    json j = quick(t);
    j["sampler"] = {{"n_steps", 1000}, {"n_chains", 10000}};
    j["diagnostics"]["nll_samples"] = 1000;
    Options o{write_config(j, std::string(t) + ".json")};
    o.oracle = true;
    EXPECT_EQ(run("validate", o), kExitOk) << t << "\n" << log_.str();
  }
}

TEST_F(CliTest, ZeroThresholdsFailButWriteReport) {
  json j = quick();
  j["diagnostics"]["checks"] = {"marginal", "tweedie"};
  j["diagnostics"]["thresholds"] = {{"marginal", 0.0}, {"tweedie", 0.0}};
  Options o{write_config(j)};
  o.oracle = true;
  EXPECT_EQ(run("validate", o), kExitValidation);
  const json rep = read(only_run_dir("-oracle") / "report.json");
  EXPECT_EQ(rep["checks"].size(), 2u);
  EXPECT_EQ(rep["schema_version"], 1);
}

TEST_F(CliTest, UnknownCheckIsConfigError) {
  json j = quick();
  j["diagnostics"]["checks"] = {"tweedie", "vibes"};
  Options o{write_config(j)};
  o.oracle = true;
  EXPECT_EQ(run("validate", o), kExitUsage);
  EXPECT_NE(log_.str().find("diagnostics.checks[1]"), std::string::npos) << log_.str();
}

TEST_F(CliTest, MissingModelIsUsageError) {
  EXPECT_EQ(run("sample", {write_config(quick())}), kExitUsage);
  EXPECT_NE(log_.str().find("--oracle"), std::string::npos);
}

TEST_F(CliTest, CorruptCheckpointIsRuntimeError) {
  std::ofstream(root_ / "bad.bnfw") << "not a model";
  EXPECT_EQ(run("sample", {write_config(quick()), (root_ / "bad.bnfw").string()}), kExitRuntime);
}

TEST_F(CliTest, CheckpointDimensionMismatch) {
  const std::string cfg1 = write_config(quick(), "d1.json");
  ASSERT_EQ(run("train", {cfg1}), kExitOk);
  const fs::path model = only_run_dir() / "model.bnfw";
  json j = quick();
  j["dim"] = 2;
  j["likelihood"]["mode"] = "monte_carlo";
  EXPECT_EQ(run("sample", {write_config(j, "d2.json"), model.string()}), kExitRuntime);
  EXPECT_NE(log_.str().find("dimension"), std::string::npos) << log_.str();
}

TEST_F(CliTest, ReportAggregatesSeedsAndTargets) {
  json j = quick();
  const std::string cfg = write_config(j);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    Options o{cfg};
    o.oracle = true;
    o.seed = s;
    ASSERT_EQ(run("nll", o), kExitOk);
  }
  Options z{write_config(quick("zip"), "zip.json")};
  z.oracle = true;
  ASSERT_EQ(run("nll", z), kExitOk);
  ASSERT_EQ(run("report", {}), kExitOk);
  const std::string md = slurp(root_ / "runs" / "report.md");
  EXPECT_NE(md.find("| poisson (oracle) | "), std::string::npos) << md;
  EXPECT_NE(md.find("| 5 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| zip (oracle) | "), std::string::npos) << md;
  const std::string csv = slurp(root_ / "runs" / "nll_table.csv");
  EXPECT_EQ(csv.rfind("target,n_runs,mean,std_error\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(CliTest, ReportOnEmptyDirectory) {
  fs::create_directories(root_ / "runs");
  ASSERT_EQ(run("report", {}), kExitOk);
  EXPECT_NE(slurp(root_ / "runs" / "report.md").find("No runs found"), std::string::npos);
}

TEST_F(CliTest, ReportListsMissingArtifacts) {
  ASSERT_EQ(run("train", {write_config(quick())}), kExitOk);
  fs::remove(only_run_dir() / "train.json");
  ASSERT_EQ(run("report", {}), kExitOk);
  EXPECT_NE(slurp(root_ / "runs" / "report.md").find("Missing artifacts"), std::string::npos);
}

int exe(const std::string& args) {
  const int status = std::system((std::string(BINFLOW_EXE) + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliTest, ExecutableExitCodes) {
  EXPECT_EQ(exe("--help >/dev/null"), 0);
  EXPECT_EQ(exe("frobnicate"), 1);
  EXPECT_EQ(exe("train"), 1);
  EXPECT_EQ(exe("sample --config /nonexistent.json --oracle"), 1);
  const std::string cfg = write_config(quick());
  EXPECT_EQ(exe("validate --oracle --config " + cfg + " --out " + (root_ / "runs").string() +
                " --seed 3"),
            0);
  EXPECT_TRUE(fs::exists(root_ / "runs" / (config_digest(load_config(cfg)) + "-s3-oracle") /
                         "report.json"));
}

}  // namespace
}  // namespace binflow::cli
