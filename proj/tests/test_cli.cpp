#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"

using sslam::testing::slurp;
using sslam::testing::TempDir;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SSLAM_CLI_PATH) + " " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("sslam_cli");
    std::ofstream(dir_->path() / "small.spec") << "scenario = flight1\n"
                                                  "aisle_count = 1\naisle_length = 3\ncross_aisle_width = 2\n"
                                                  "image_width = 32\nimage_height = 24\nperimeter_laps = 1\n";
    gen_status_ = run_cli("gen --spec " + q(dir_->path() / "small.spec") + " --seed 3 --out " + q(data()),
                          dir_->path() / "gen.log");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }
  static fs::path root() { return dir_->path(); }
  static fs::path data() { return dir_->path() / "data"; }
  static std::string coarse_grid() { return " --grid-tx=-1:1:0.1 --grid-ty=-1:1:0.1 --grid-phi-deg=-170:180:10"; }

  static TempDir* dir_;
  static int gen_status_;
};

TempDir* Cli::dir_ = nullptr;
int Cli::gen_status_ = -1;

}  // namespace

TEST_F(Cli, GenWritesDatasetAndEchoesSpec) {
  ASSERT_EQ(gen_status_, 0) << slurp(root() / "gen.log");
  EXPECT_TRUE(fs::exists(data() / "frames" / "000000.pgm"));
  const auto meta = nlohmann::json::parse(slurp(data() / "meta.json"));
  EXPECT_EQ(meta["width"], 32);
  EXPECT_EQ(meta["seed"], 3);
  EXPECT_EQ(meta["scenario"], "flight1");
  EXPECT_EQ(meta["spec"]["aisle_count"], 1);
}

TEST_F(Cli, GenIsByteIdenticalAcrossInvocations) {
  ASSERT_EQ(gen_status_, 0);
  const auto again = root() / "again";
  ASSERT_EQ(run_cli("gen --spec " + q(root() / "small.spec") + " --seed 3 --out " + q(again), root() / "g2.log"), 0);
  for (const char* f : {"odometry.csv", "ground_truth.csv", "meta.json", "frames/000010.pgm"})
    EXPECT_EQ(slurp(data() / f), slurp(again / f)) << f;
}

TEST_F(Cli, RunReplayEvalPipeline) {
  ASSERT_EQ(gen_status_, 0);
  const auto out = root() / "run";
  ASSERT_EQ(run_cli("run --dataset " + q(data()) + " --out " + q(out) + " --reference-input-size 89960 --mu 0.995" +
                        coarse_grid(),
                    root() / "run.log"),
            0)
      << slurp(root() / "run.log");
  for (const char* f : {"trajectory.csv", "map.csv", "links.csv", "templates.csv", "surprise.csv", "dictionary.dlsc",
                        "metrics.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics["mu"], 0.995);

  const auto rep = root() / "replay";
  ASSERT_EQ(run_cli("replay --dataset " + q(data()) + " --dictionary " + q(out / "dictionary.dlsc") + " --out " +
                        q(rep) + " --reference-input-size 89960",
                    root() / "replay.log"),
            0)
      << slurp(root() / "replay.log");
  EXPECT_EQ(slurp(rep / "replay.csv").substr(0, 6), "k,e_k\n");

  const auto ev = root() / "eval";
  ASSERT_EQ(run_cli("eval --trajectory " + q(data() / "ground_truth.csv") + " --ground-truth " +
                        q(data() / "ground_truth.csv") + " --out " + q(ev) + coarse_grid(),
                    root() / "eval.log"),
            0)
      << slurp(root() / "eval.log");
  const auto em = nlohmann::json::parse(slurp(ev / "metrics.json"));
  EXPECT_EQ(em["mae_l"], 0.0);
  EXPECT_EQ(em["mae_m"], 0.0);
}

TEST_F(Cli, SweepWritesSweepAndBestRun) {
  ASSERT_EQ(gen_status_, 0);
  const auto out = root() / "sweep";
  ASSERT_EQ(run_cli("sweep-mu --dataset " + q(data()) + " --out " + q(out) +
                        " --reference-input-size 89960 --mu-values 0.99,0.995,2" + coarse_grid(),
                    root() / "sweep.log"),
            0)
      << slurp(root() / "sweep.log");
  const auto sweep = nlohmann::json::parse(slurp(out / "sweep.json"));
  EXPECT_EQ(sweep["runs"].size(), 3u);
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics["mu"], sweep["best_mu"]);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  ASSERT_EQ(gen_status_, 0);
  std::ofstream(root() / "run.cfg") << "mu = 0.9\nreference_input_size = 89960\n";
  const auto out = root() / "override";
  ASSERT_EQ(run_cli("run --config " + q(root() / "run.cfg") + " --dataset " + q(data()) + " --out " + q(out) +
                        " --mu 0.97" + coarse_grid(),
                    root() / "override.log"),
            0)
      << slurp(root() / "override.log");
  EXPECT_EQ(nlohmann::json::parse(slurp(out / "metrics.json"))["mu"], 0.97);
}

TEST_F(Cli, DatasetErrorsExitWithTwo) {
  EXPECT_EQ(run_cli("run --dataset " + q(root() / "nowhere") + " --out " + q(root() / "x"), root() / "e2.log"), 2);
  ASSERT_EQ(gen_status_, 0);
  const auto broken = root() / "broken";
  fs::copy(data(), broken, fs::copy_options::recursive);
  fs::remove(broken / "frames" / "000004.pgm");
  EXPECT_EQ(run_cli("run --dataset " + q(broken) + " --out " + q(root() / "y"), root() / "e2b.log"), 2);
  EXPECT_NE(slurp(root() / "e2b.log").find("missing frame 4"), std::string::npos);
}

TEST_F(Cli, DivergenceExitsWithThree) {
  ASSERT_EQ(gen_status_, 0);
  EXPECT_EQ(run_cli("run --dataset " + q(data()) + " --out " + q(root() / "div") + " --eta-c 1e6",
                    root() / "e3.log"),
            3)
      << slurp(root() / "e3.log");
  EXPECT_NE(slurp(root() / "e3.log").find("divergence at frame"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitNonZero) {
  EXPECT_NE(run_cli("", root() / "u1.log"), 0);
  EXPECT_NE(run_cli("run --bogus-flag 1", root() / "u2.log"), 0);
  EXPECT_EQ(run_cli("run --dataset " + q(data()) + " --out " + q(root() / "z") + " --n-c abc", root() / "u3.log"), 1);
}
