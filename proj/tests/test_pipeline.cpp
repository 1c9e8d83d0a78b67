#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sslam/pipeline.hpp"
#include "sslam/synthstream.hpp"
#include "test_support.hpp"

using namespace sslam;
using sslam::testing::slurp;
using sslam::testing::TempDir;

namespace {

// Two laps round a single short aisle block, rendered small so a run takes well under a second.
const Dataset& loop_dataset() {
  static const Dataset ds = [] {
    ScenarioOptions o;
    o.seed = 2;
    o.world.aisle_count = 1;
    o.world.aisle_length = 3.0;
    o.world.cross_aisle_width = 2.0;
    o.world.image_width = 32;
    o.world.image_height = 24;
    o.perimeter_laps = 2;
    return to_dataset(make_scenario("flight1", o));
  }();
  return ds;
}

RunConfig loop_config() {
  RunConfig c;
  c.reference_input_size = 89960;
  c.matcher.mu = 0.995;
  c.grid = {{-1.0, 1.0, 0.1}, {-1.0, 1.0, 0.1}, {-std::numbers::pi + std::numbers::pi / 18, std::numbers::pi,
                                                  std::numbers::pi / 18}};
  return c;
}

Trajectory dead_reckoning(const Dataset& ds) {
  Trajectory t;
  Pose2 p{};
  for (const auto& o : ds.odometry) {
    p = integrate_odometry(p, o);
    t.points.push_back({o.timestamp, p.x, p.y});
  }
  return t;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Pipeline, WritesEveryArtifactWithTheExpectedShape) {
  TempDir dir("sslam_pipeline");
  const auto& ds = loop_dataset();
  const auto run = run_slam(loop_config(), ds);
  write_run_artifacts(run, dir.path());

  const auto surprise = lines_of(slurp(dir.path() / "surprise.csv"));
  ASSERT_EQ(surprise.size(), ds.frames.size() + 1);
  EXPECT_EQ(surprise[0], "k,e_k,s2_raw,s2_filtered,gate_open");
  EXPECT_EQ(surprise[1].substr(0, 2), "0,");
  EXPECT_NE(surprise[1].find(",nan,"), std::string::npos);

  const auto traj = lines_of(slurp(dir.path() / "trajectory.csv"));
  EXPECT_EQ(traj.size(), ds.frames.size() + 1);
  const auto map = read_map_csv(dir.path() / "map.csv");
  EXPECT_EQ(map.size(), run.mapping.tracker.map().experiences().size());
  const auto templates = lines_of(slurp(dir.path() / "templates.csv"));
  EXPECT_EQ(templates.size(), run.mapping.templates.size() + 1);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "links.csv"));

  const auto dict = load_dictionary(dir.path() / "dictionary.dlsc");
  EXPECT_TRUE(dict == run.encoding.encoder.dictionary);

  const auto metrics = nlohmann::json::parse(slurp(dir.path() / "metrics.json"));
  for (const char* key : {"scenario", "mae_l", "mae_m", "transform", "mu", "params_hash"})
    EXPECT_TRUE(metrics.contains(key)) << key;
  EXPECT_EQ(metrics["scenario"], "flight1");
  EXPECT_EQ(metrics["mu"], 0.995);
  EXPECT_EQ(metrics["params_hash"], loop_config().params_hash());
  EXPECT_GE(metrics["mae_l"].get<double>(), 0.0);
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
  TempDir a("sslam_pipeline"), b("sslam_pipeline");
  write_run_artifacts(run_slam(loop_config(), loop_dataset()), a.path());
  write_run_artifacts(run_slam(loop_config(), loop_dataset()), b.path());
  for (const char* f : {"metrics.json", "surprise.csv", "trajectory.csv", "map.csv", "dictionary.dlsc"})
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
}

TEST(Pipeline, TelemetryMatchesUngatedRunUntilTheFirstClosedGate) {
  const auto& ds = loop_dataset();
  RunConfig gated = loop_config();
  RunConfig ungated = gated;
  ungated.gating = false;
  const auto g = run_encoder(ds.frames, gated);
  const auto u = run_encoder(ds.frames, ungated);
  std::size_t first_closed = g.telemetry.size();
  for (std::size_t k = 0; k < g.telemetry.size(); ++k)
    if (!g.telemetry[k].gate_open) {
      first_closed = k;
      break;
    }
  ASSERT_LT(first_closed, g.telemetry.size());
  for (std::size_t k = 0; k <= first_closed; ++k) {
    EXPECT_EQ(g.telemetry[k].error, u.telemetry[k].error) << k;
    EXPECT_EQ(g.telemetry[k].s2_filtered, u.telemetry[k].s2_filtered) << k;
  }
  EXPECT_NE(g.telemetry[first_closed + 1].error, u.telemetry[first_closed + 1].error);
  EXPECT_LT(g.dictionary_updates, u.dictionary_updates);
  EXPECT_EQ(u.dictionary_updates, ds.frames.size());
}

TEST(Pipeline, GateFlagAgreesWithDelayedFilteredSurprise) {
  const auto enc = run_encoder(loop_dataset().frames, loop_config());
  EXPECT_TRUE(enc.telemetry[0].gate_open);
  for (std::size_t k = 1; k < enc.telemetry.size(); ++k)
    EXPECT_EQ(enc.telemetry[k].gate_open, enc.telemetry[k - 1].s2_filtered > 0.0) << k;
}

TEST(Pipeline, SequenceGapIsRejected) {
  auto frames = std::vector<Frame>(loop_dataset().frames.begin(), loop_dataset().frames.begin() + 10);
  frames.erase(frames.begin() + 4);
  try {
    run_encoder(frames, loop_config());
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("gap"), std::string::npos);
  }
}

TEST(Pipeline, ReplayMatchesManualFrozenEncoding) {
  const auto& ds = loop_dataset();
  const std::vector<Frame> frames(ds.frames.begin(), ds.frames.begin() + 20);
  const auto config = loop_config();
  const auto enc = run_encoder(frames, config);
  const DlscParams params = config.dlsc_for(frames[0].size());
  const auto errors = replay_errors(frames, enc.encoder.dictionary, params);
  ASSERT_EQ(errors.size(), frames.size());

  EncoderState s;
  s.dictionary = enc.encoder.dictionary;
  s.params = params;
  s.code = SparseCode::Zero(static_cast<Eigen::Index>(s.dictionary.n_atoms()));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const SparseCode c = encode(s, frames[k]);
    EXPECT_EQ(errors[k], reprojection_error(s.dictionary, c, frames[k].pixels)) << k;
  }
}

TEST(Sweep, SingleMuEqualsPlainRun) {
  const auto& ds = loop_dataset();
  const auto config = loop_config();
  const auto run = run_slam(config, ds);
  const auto sweep = sweep_mu(config, ds, run.encoding, {config.matcher.mu});
  ASSERT_EQ(sweep.per_mu.size(), 1u);
  EXPECT_EQ(sweep.best_mu, config.matcher.mu);
  EXPECT_EQ(metrics_json(sweep.per_mu[0]), metrics_json(run.metrics));
}

TEST(Sweep, MuAboveOneGivesDeadReckoning) {
  const auto& ds = loop_dataset();
  auto config = loop_config();
  config.matcher.mu = 1.5;
  const auto run = run_slam(config, ds);
  EXPECT_EQ(run.mapping.loop_closures, 0u);
  const auto dr = dead_reckoning(ds);
  const auto expected = evaluate_trajectory(dr, run.mapping.map_points(), ds.ground_truth, config.grid,
                                            config.grid_refine, config.mapping_normalization);
  EXPECT_NEAR(run.metrics.mae_l, expected.mae_l, 1e-9);
}

TEST(Sweep, PicksTheBruteForceMinimum) {
  const auto& ds = loop_dataset();
  const auto config = loop_config();
  const auto enc = run_encoder(ds.frames, config);
  const std::vector<double> mus{0.99, 0.995, 0.999};
  const auto sweep = sweep_mu(config, ds, enc, mus);
  double best = 1e300;
  double best_mu = 0.0;
  for (double mu : mus) {
    RunConfig c = config;
    c.matcher.mu = mu;
    const auto m = run_slam(c, ds).metrics;
    if (m.mae_l < best) {
      best = m.mae_l;
      best_mu = mu;
    }
  }
  EXPECT_EQ(sweep.best_mu, best_mu);
  const auto parsed = nlohmann::json::parse(sweep_json(sweep));
  EXPECT_EQ(parsed["runs"].size(), 3u);
  EXPECT_EQ(parsed["best_mu"], best_mu);
  EXPECT_THROW(sweep_mu(config, ds, enc, {}), std::invalid_argument);
}

TEST(Config, FileParsingAndErrors) {
  TempDir dir("sslam_config");
  const auto path = dir.path() / "run.cfg";
  std::ofstream(path) << "# comment\n mu = 0.97  # trailing\n\nn_c=12\ngating = false\ngrid_phi_deg = -90:90:5\n";
  RunConfig c;
  apply_config_file(c, path);
  EXPECT_EQ(c.matcher.mu, 0.97);
  EXPECT_EQ(c.dlsc.n_c, 12);
  EXPECT_FALSE(c.gating);
  EXPECT_NEAR(c.grid.phi.step, std::numbers::pi / 36, 1e-15);

  std::ofstream(path) << "mu 0.97\n";
  EXPECT_THROW(apply_config_file(c, path), std::invalid_argument);
  EXPECT_THROW(apply_config_value(c, "bogus", "1"), std::invalid_argument);
  EXPECT_THROW(apply_config_value(c, "n_c", "twelve"), std::invalid_argument);
  EXPECT_THROW(apply_config_value(c, "reference_input_size", "-1"), std::invalid_argument);
  EXPECT_THROW(apply_config_value(c, "color", "cmyk"), std::invalid_argument);
  EXPECT_THROW(apply_config_file(c, dir.path() / "absent.cfg"), std::invalid_argument);
}

TEST(Config, LaterValuesOverrideEarlierOnes) {
  RunConfig c;
  apply_config_value(c, "mu", "0.9");
  apply_config_value(c, "mu", "0.8");
  EXPECT_EQ(c.matcher.mu, 0.8);
}

TEST(Config, EveryKeyIsAccepted) {
  const auto keys = config_keys();
  EXPECT_GE(keys.size(), 20u);
  for (const char* k : {"eta_c", "eta_d", "lambda1", "n_c", "n_atoms", "mu", "alpha", "surprise_window", "gating"})
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
}

TEST(Config, ParamsHashTracksSettingsNotPaths) {
  RunConfig a, b;
  EXPECT_EQ(a.params_hash().size(), 16u);
  EXPECT_EQ(a.params_hash(), b.params_hash());
  b.dataset = "/elsewhere";
  b.out = "/tmp/x";
  EXPECT_EQ(a.params_hash(), b.params_hash());
  b.matcher.mu = 0.5;
  EXPECT_NE(a.params_hash(), b.params_hash());
  RunConfig c;
  c.reference_input_size = 100;
  EXPECT_NE(a.params_hash(), c.params_hash());
}

TEST(Config, InputSizeScalingAppliesOnlyWhenSet) {
  RunConfig c;
  EXPECT_EQ(c.dlsc_for(768).eta_c, c.dlsc.eta_c);
  c.reference_input_size = 1536;
  const auto s = c.dlsc_for(768);
  EXPECT_DOUBLE_EQ(s.eta_c, 2.0 * c.dlsc.eta_c);
  EXPECT_DOUBLE_EQ(s.lambda1, 0.5 * c.dlsc.lambda1);
  EXPECT_EQ(s.eta_d, c.dlsc.eta_d);
  EXPECT_EQ(s.sigma_w, c.dlsc.sigma_w);
}

TEST(Config, ValidationRejectsBadValues) {
  RunConfig c;
  c.surprise_window = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.grid_refine = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
