#include <cmath>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "sslam/backend.hpp"
#include "sslam/dlsc.hpp"
#include "sslam/eval.hpp"
#include "sslam/surprise.hpp"
#include "sslam/synthstream.hpp"

using namespace sslam;

namespace {

const World& world() {
  static const World w{WorldSpec{}};
  return w;
}

Frame rendered(std::uint64_t id) {
  Frame f;
  f.id = id;
  f.width = world().spec().image_width;
  f.height = world().spec().image_height;
  f.pixels = world().render({-5.0 + 0.05 * static_cast<double>(id % 100), world().aisle_center_y(0), 0.3});
  return f;
}

DlscParams scaled_defaults(std::size_t n) { return scaled_for_input_size(DlscParams{}, 89960, n); }

Trajectory noisy_walk(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> step(0.0, 0.1);
  Trajectory t;
  double x = 0, y = 0;
  for (std::size_t k = 0; k < n; ++k) {
    x += step(rng);
    y += step(rng);
    t.points.push_back({0.1 * static_cast<double>(k), x, y});
  }
  return t;
}

}  // namespace

static void BM_Render(benchmark::State& state) {
  double x = -5.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(world().render({x, world().aisle_center_y(1), 0.7}));
    x = x > 5.0 ? -5.0 : x + 0.05;
  }
}
BENCHMARK(BM_Render);

static void BM_Encode(benchmark::State& state) {
  const Frame f = rendered(0);
  auto enc = make_encoder(f.size(), scaled_defaults(f.size()), 1);
  for (auto _ : state) benchmark::DoNotOptimize(encode(enc, f));
}
BENCHMARK(BM_Encode);

static void BM_GatedStep(benchmark::State& state) {
  std::vector<Frame> frames;
  for (std::uint64_t k = 0; k < 100; ++k) frames.push_back(rendered(k));
  auto enc = make_encoder(frames[0].size(), scaled_defaults(frames[0].size()), 1);
  SurpriseState surprise;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gated_learning_step(enc, surprise, frames[k % frames.size()]));
    ++k;
  }
}
BENCHMARK(BM_GatedStep);

// One loop closure on a square chain of `n` experiences: what on_sample pays per closure.
static void BM_RelaxSquareLoop(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const RelaxParams params;
  for (auto _ : state) {
    state.PauseTiming();
    ExperienceMap map;
    const double side = n / 4.0;
    Pose2 pose{};
    for (int i = 0; i < n; ++i) {
      const double turn = (i > 0 && i % (n / 4) == 0) ? std::numbers::pi / 2 : 0.0;
      pose = compose(pose, {1.0 / side * 4.0 + 0.01, 0.002, turn + 0.001});
      map.on_sample(pose, i * 0.1, std::nullopt, params);
    }
    state.ResumeTiming();
    benchmark::DoNotOptimize(map.on_sample(pose, n * 0.1, std::int64_t{0}, params));
  }
}
BENCHMARK(BM_RelaxSquareLoop)->Arg(100)->Arg(400)->Arg(1600);

static void BM_GridSearchDefaultGrid(benchmark::State& state) {
  const auto gt = noisy_walk(static_cast<std::size_t>(state.range(0)));
  const auto traj = apply_transform({0.73, -1.1, 0.4}, gt);
  const auto grid = GridSpec::default_grid();
  for (auto _ : state) benchmark::DoNotOptimize(align_by_grid_search(traj, gt, grid));
}
BENCHMARK(BM_GridSearchDefaultGrid)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_MaeMapping(benchmark::State& state) {
  const auto gt = noisy_walk(2000);
  std::vector<MapPoint> map;
  for (std::size_t k = 0; k < gt.size(); k += 4) map.push_back({gt.points[k].x + 0.1, gt.points[k].y});
  for (auto _ : state) benchmark::DoNotOptimize(mae_mapping(map, gt));
}
BENCHMARK(BM_MaeMapping);

BENCHMARK_MAIN();
