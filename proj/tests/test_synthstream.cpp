#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sslam/backend.hpp"
#include "sslam/synthstream.hpp"

using namespace sslam;

namespace {

constexpr double kPi = std::numbers::pi;

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

// 8-bit pixel values, as stored in frames.
Eigen::VectorXd quantised(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return std::round(x * 255.0); });
}

// Views straight at the shelf faces on both sides of every aisle.
std::vector<Eigen::VectorXd> aisle_face_views(const World& w) {
  std::vector<Eigen::VectorXd> views;
  for (int a = 0; a < w.spec().aisle_count; ++a)
    for (double heading : {kPi / 2, -kPi / 2}) views.push_back(w.render({1.0, w.aisle_center_y(a), heading}));
  return views;
}

FlightPlan straight_plan(const World& w, double sigma_xy) {
  FlightPlan p;
  p.waypoints = w.perimeter_waypoints(1);
  p.sigma_xy = sigma_xy;
  p.sigma_theta = 0.0;
  return p;
}

}  // namespace

TEST(World, SameSpecRendersIdentically) {
  WorldSpec spec;
  spec.seed = 9;
  const World a(spec), b(spec);
  for (const Pose2 p : {Pose2{-5, -4, 0.2}, Pose2{0, 0.1, 1.0}, Pose2{6, 3, -2.0}})
    EXPECT_EQ(a.render(p), b.render(p));
}

TEST(World, DifferentSeedsDiffer) {
  WorldSpec a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(World(a).render({1.0, World(a).aisle_center_y(0), kPi / 2}),
            World(b).render({1.0, World(b).aisle_center_y(0), kPi / 2}));
}

TEST(World, SingleTextureBankMakesAisleViewsIdentical) {
  WorldSpec spec;
  spec.texture_bank_size = 1;
  const World w(spec);
  for (double heading : {kPi / 2, -kPi / 2}) {
    const auto reference = quantised(w.render({1.0, w.aisle_center_y(1), heading}));
    for (int a = 0; a < spec.aisle_count; ++a)
      EXPECT_EQ(quantised(w.render({1.0, w.aisle_center_y(a), heading})), reference) << "aisle " << a;
  }
}

TEST(World, FullTextureBankMakesAisleViewsDistinct) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    WorldSpec spec;
    spec.seed = seed;
    spec.texture_bank_size = 2 * spec.aisle_count;
    const World w(spec);
    const auto views = aisle_face_views(w);
    double worst = -1.0;
    for (std::size_t i = 0; i < views.size(); ++i)
      for (std::size_t j = i + 1; j < views.size(); ++j) worst = std::max(worst, cosine(views[i], views[j]));
    EXPECT_LT(worst, 0.99) << "seed " << seed;
  }
}

TEST(World, RenderIsInUnitRange) {
  const World w(WorldSpec{});
  const auto img = w.render({0.0, w.aisle_center_y(1), 0.3});
  EXPECT_EQ(img.size(), 64 * 48);
  EXPECT_GE(img.minCoeff(), 0.0);
  EXPECT_LE(img.maxCoeff(), 1.0);
}

TEST(World, WaypointsLieInFreeSpace) {
  const World w(WorldSpec{});
  for (const auto& p : w.perimeter_waypoints(2)) EXPECT_TRUE(w.is_free(p));
  for (const auto& p : w.aisle_waypoints()) EXPECT_TRUE(w.is_free(p));
  EXPECT_FALSE(w.is_free({0.0, 0.5 * (w.aisle_center_y(0) + w.aisle_center_y(1))}));
  EXPECT_FALSE(w.is_free({w.room_half_x() + 1.0, 0.0}));
}

TEST(WorldSpec, Validation) {
  WorldSpec s;
  s.texture_bank_size = 0;
  EXPECT_THROW(World{s}, std::invalid_argument);
  s = WorldSpec{};
  s.camera_height = 5.0;
  EXPECT_THROW(World{s}, std::invalid_argument);
}

TEST(Flight, ZeroNoiseOdometryIntegratesToGroundTruth) {
  const World w(WorldSpec{});
  const auto rec = simulate_flight(w, straight_plan(w, 0.0));
  Pose2 p = rec.true_poses.front();
  for (std::size_t k = 0; k < rec.odometry.size(); ++k) {
    p = integrate_odometry(p, rec.odometry[k]);
    EXPECT_NEAR(p.x, rec.ground_truth.points[k].x, 1e-9);
    EXPECT_NEAR(p.y, rec.ground_truth.points[k].y, 1e-9);
  }
}

TEST(Flight, GroundTruthIsTheCommandedPath) {
  const World w(WorldSpec{});
  const auto rec = simulate_flight(w, straight_plan(w, 0.05));
  ASSERT_EQ(rec.ground_truth.size(), rec.true_poses.size());
  for (std::size_t k = 0; k < rec.true_poses.size(); ++k) {
    EXPECT_EQ(rec.ground_truth.points[k].x, rec.true_poses[k].x);
    EXPECT_EQ(rec.ground_truth.points[k].y, rec.true_poses[k].y);
    EXPECT_EQ(rec.frames[k].pixels, w.render(rec.true_poses[k]).unaryExpr([](double v) {
      return std::round(v * 255.0) / 255.0;
    }));
  }
}

TEST(Flight, DeterministicPerSeed) {
  const World w(WorldSpec{});
  const auto a = simulate_flight(w, straight_plan(w, 0.02));
  const auto b = simulate_flight(w, straight_plan(w, 0.02));
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    EXPECT_EQ(a.frames[k].pixels, b.frames[k].pixels);
    EXPECT_EQ(a.odometry[k].dx, b.odometry[k].dx);
    EXPECT_EQ(a.odometry[k].dtheta, b.odometry[k].dtheta);
  }
}

TEST(Flight, DriftGrowsWithPathLength) {
  // Mean endpoint error over seeds after one and after three laps.
  const World w(WorldSpec{});
  auto mean_error = [&](int laps) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      FlightPlan p;
      p.waypoints = w.perimeter_waypoints(laps);
      p.sigma_xy = 0.02;
      p.noise_seed = seed;
      const auto rec = simulate_flight(w, p);
      Pose2 dr = rec.true_poses.front();
      for (const auto& o : rec.odometry) dr = integrate_odometry(dr, o);
      total += std::hypot(dr.x - rec.true_poses.back().x, dr.y - rec.true_poses.back().y);
    }
    return total / 20.0;
  };
  EXPECT_GT(mean_error(3), mean_error(1));
}

TEST(Flight, RedundancyBoundHolds) {
  ScenarioOptions o;
  for (const auto& rec : builtin_scenarios(o)) EXPECT_LE(max_consecutive_delta(rec), 0.15) << rec.scenario;
}

TEST(Flight, RedundancyViolationIsReported) {
  const World w(WorldSpec{});
  FlightPlan p = straight_plan(w, 0.0);
  p.speed = 20.0;
  EXPECT_THROW(simulate_flight(w, p), std::runtime_error);
}

TEST(Flight, WaypointInsideShelfRejected) {
  const World w(WorldSpec{});
  FlightPlan p;
  p.waypoints = {{-w.room_half_x() + 0.5, -w.room_half_y() + 0.5}, {0.0, 0.5 * (w.aisle_center_y(0) + w.aisle_center_y(1))}};
  EXPECT_THROW(simulate_flight(w, p), std::invalid_argument);
}

TEST(Scenarios, Flight3ConcatenatesFlights1And2) {
  ScenarioOptions o;
  const auto all = builtin_scenarios(o);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[2].frames.size(), all[0].frames.size() + all[1].frames.size());
  const auto& f3 = all[2];
  for (std::size_t k = 0; k < f3.frames.size(); ++k) EXPECT_EQ(f3.frames[k].id, k);
  for (std::size_t k = 1; k < f3.frames.size(); ++k) EXPECT_GT(f3.frames[k].timestamp, f3.frames[k - 1].timestamp);
  EXPECT_EQ(f3.frames[all[0].frames.size()].pixels, all[1].frames[0].pixels);
}

TEST(Scenarios, AisleFlightIsMoreAliasedThanPerimeter) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioOptions o;
    o.seed = seed;
    const auto f1 = make_scenario("flight1", o);
    const auto f2 = make_scenario("flight2", o);
    EXPECT_GT(mean_pairwise_similarity(f2, 5), mean_pairwise_similarity(f1, 5)) << "seed " << seed;
  }
}

TEST(Scenarios, DeterministicPerSeed) {
  ScenarioOptions o;
  o.seed = 4;
  for (const char* name : {"flight1", "flight2", "flight3"}) {
    const auto a = make_scenario(name, o);
    const auto b = make_scenario(name, o);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t k = 0; k < a.frames.size(); k += 37) EXPECT_EQ(a.frames[k].pixels, b.frames[k].pixels);
    EXPECT_EQ(a.odometry.back().dx, b.odometry.back().dx);
  }
  EXPECT_THROW(make_scenario("flight9", o), std::invalid_argument);
}

TEST(ScenarioFile, ParsesKeysAndRejectsUnknown) {
  ScenarioFile f;
  apply_scenario_value(f, " scenario ", " flight2 ");
  apply_scenario_value(f, "texture_bank_size", "2");
  apply_scenario_value(f, "sigma_xy", "0.05");
  EXPECT_EQ(f.scenario, "flight2");
  EXPECT_EQ(f.options.world.texture_bank_size, 2);
  EXPECT_EQ(f.options.sigma_xy, 0.05);
  ASSERT_EQ(f.entries.size(), 3u);
  EXPECT_EQ(f.entries[1].first, "texture_bank_size");
  EXPECT_THROW(apply_scenario_value(f, "colour", "red"), std::invalid_argument);
  EXPECT_THROW(apply_scenario_value(f, "aisle_count", "many"), std::invalid_argument);
}

TEST(Similarity, Helpers) {
  const Eigen::Vector3d a(0.1, 0.2, 0.3), b(0.2, 0.2, 0.0);
  EXPECT_NEAR(mean_abs_delta(a, b), (0.1 + 0.0 + 0.3) / 3.0, 1e-15);
}
