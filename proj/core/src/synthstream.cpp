#include "sslam/synthstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace sslam {

namespace {

constexpr double kCeilingShade = 0.85;
constexpr double kFloorShade = 0.4;
constexpr double kFogShade = 0.55;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic uniform in [0,1) keyed on (seed, texture, cell coordinates).
double lattice(std::uint64_t seed, int texture, long long i, long long j) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(texture));
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

}  // namespace

void WorldSpec::validate() const {
  if (aisle_count < 1) throw std::invalid_argument("world: aisle_count must be >= 1");
  if (texture_bank_size < 1) throw std::invalid_argument("world: texture_bank_size must be >= 1");
  if (image_width < 2 || image_height < 2) throw std::invalid_argument("world: image too small");
  if (!(aisle_length > 0 && aisle_width > 0 && shelf_depth > 0 && corridor_width > 0 &&
        cross_aisle_width > 0 && wall_height > 0 && max_view_distance > 0))
    throw std::invalid_argument("world: lengths must be positive");
  if (!(camera_height > 0 && camera_height < wall_height))
    throw std::invalid_argument("world: camera must be between floor and wall top");
  if (!(fov_deg > 0 && fov_deg < 180)) throw std::invalid_argument("world: fov must be in (0,180)");
}

World::World(const WorldSpec& spec) : spec_(spec) {
  spec_.validate();
  const int n = spec_.aisle_count;
  const double half_len = spec_.aisle_length / 2.0;
  block_half_y_ = ((n + 1) * spec_.shelf_depth + n * spec_.aisle_width) / 2.0;
  room_half_x_ = half_len + spec_.cross_aisle_width;
  room_half_y_ = block_half_y_ + spec_.corridor_width;

  // Bank entries are dealt from a seeded permutation, cycling when faces outnumber
  // the bank. Aisle-facing faces come first so a bank of 2*aisle_count keeps every
  // aisle face distinct.
  std::vector<int> perm(static_cast<std::size_t>(spec_.texture_bank_size));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(splitmix64(spec_.seed ^ 0x5e1f));
  std::shuffle(perm.begin(), perm.end(), rng);
  int face = 0;
  auto next_texture = [&] { return perm[static_cast<std::size_t>(face++) % perm.size()]; };

  auto row_lo = [&](int j) { return -block_half_y_ + j * (spec_.shelf_depth + spec_.aisle_width); };
  // Long faces start at x = -half_len so texture coordinates line up across aisles.
  for (int i = 0; i < n; ++i) {
    const double below_top = row_lo(i) + spec_.shelf_depth;
    const double above_bottom = row_lo(i + 1);
    segments_.push_back({{-half_len, below_top}, {half_len, below_top}, next_texture(), true});
    segments_.push_back({{-half_len, above_bottom}, {half_len, above_bottom}, next_texture(), true});
  }
  segments_.push_back({{-half_len, row_lo(0)}, {half_len, row_lo(0)}, next_texture(), true});
  segments_.push_back({{-half_len, row_lo(n) + spec_.shelf_depth},
                       {half_len, row_lo(n) + spec_.shelf_depth}, next_texture(), true});
  for (int j = 0; j <= n; ++j) {
    const double lo = row_lo(j);
    const double hi = lo + spec_.shelf_depth;
    segments_.push_back({{-half_len, lo}, {-half_len, hi}, next_texture(), true});
    segments_.push_back({{half_len, lo}, {half_len, hi}, next_texture(), true});
  }

  // Outer walls, split into panels of roughly 3 m with unique textures.
  const Vec2 corners[4] = {{-room_half_x_, -room_half_y_},
                           {room_half_x_, -room_half_y_},
                           {room_half_x_, room_half_y_},
                           {-room_half_x_, room_half_y_}};
  int panel = 0;
  for (int w = 0; w < 4; ++w) {
    const Vec2 a = corners[w];
    const Vec2 b = corners[(w + 1) % 4];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int pieces = std::max(1, static_cast<int>(std::round(len / 3.0)));
    for (int p = 0; p < pieces; ++p) {
      const double t0 = static_cast<double>(p) / pieces;
      const double t1 = static_cast<double>(p + 1) / pieces;
      segments_.push_back({{a.x + (b.x - a.x) * t0, a.y + (b.y - a.y) * t0},
                           {a.x + (b.x - a.x) * t1, a.y + (b.y - a.y) * t1},
                           kWallTextureBase + panel++, false});
    }
  }

  // Neighbouring panels alternate between light and dark tones.
  std::uniform_real_distribution<double> tone(0.0, 0.2);
  wall_shades_.resize(static_cast<std::size_t>(panel));
  for (std::size_t i = 0; i < wall_shades_.size(); ++i)
    wall_shades_[i] = (i % 2 == 0 ? 0.65 : 0.15) + tone(rng);
}

double World::aisle_center_y(int aisle) const {
  if (aisle < 0 || aisle >= spec_.aisle_count) throw std::out_of_range("aisle index");
  return -block_half_y_ + (aisle + 1) * spec_.shelf_depth + aisle * spec_.aisle_width +
         spec_.aisle_width / 2.0;
}

bool World::is_free(const Vec2& p) const {
  if (!(std::abs(p.x) < room_half_x_ && std::abs(p.y) < room_half_y_)) return false;
  if (std::abs(p.x) > block_half_x() || std::abs(p.y) > block_half_y_) return true;
  for (int j = 0; j <= spec_.aisle_count; ++j) {
    const double lo = -block_half_y_ + j * (spec_.shelf_depth + spec_.aisle_width);
    if (p.y >= lo && p.y <= lo + spec_.shelf_depth) return false;
  }
  return true;
}

double World::texture_value(int texture, double u, double z) const {
  const std::uint64_t seed = spec_.seed;
  if (texture >= kWallTextureBase) {
    // Painted wall: panel base shade with smooth blotches and a stripe.
    if (z >= 1.0 && z < 1.15) return 0.1 + 0.15 * lattice(seed, texture, -1, -1);
    const double fu = u / 1.2;
    const double fz = z / 0.8;
    const auto iu = static_cast<long long>(std::floor(fu));
    const auto iz = static_cast<long long>(std::floor(fz));
    const double tu = smoothstep(fu - iu);
    const double tz = smoothstep(fz - iz);
    const auto slot = static_cast<std::size_t>(texture - kWallTextureBase);
    const double base = slot < wall_shades_.size() ? wall_shades_[slot] : 0.5;
    auto v = [&](long long a, long long b) {
      return std::clamp(base + 0.3 * (lattice(seed, texture, a, b) - 0.5), 0.0, 1.0);
    };
    const double lo = v(iu, iz) + (v(iu + 1, iz) - v(iu, iz)) * tu;
    const double hi = v(iu, iz + 1) + (v(iu + 1, iz + 1) - v(iu, iz + 1)) * tu;
    return lo + (hi - lo) * tz;
  }

  // Shelving: uprights, boards, and boxes of varying shade and height per level.
  constexpr double level_height = 0.75;
  constexpr double board = 0.06;
  constexpr double upright_spacing = 2.25;
  constexpr double box_width = 0.45;
  const double um = u - upright_spacing * std::floor(u / upright_spacing);
  if (um < 0.08) return 0.12;
  const auto level = static_cast<long long>(std::floor(z / level_height));
  const double zl = z - level * level_height;
  if (zl < board) return 0.18;

  const double f = u / box_width;
  const auto i0 = static_cast<long long>(std::floor(f));
  const double t = smoothstep(f - i0);
  auto lerp_cell = [&](long long salt, double lo, double span) {
    const double a = lo + span * lattice(seed, texture, i0 * 8 + salt, level);
    const double b = lo + span * lattice(seed, texture, (i0 + 1) * 8 + salt, level);
    return a + (b - a) * t;
  };
  const double box_top = board + (level_height - board) * lerp_cell(1, 0.45, 0.5);
  if (zl > box_top) return 0.3;
  return lerp_cell(0, 0.35, 0.5);
}

Eigen::VectorXd World::render(const Pose2& pose) const {
  const int w = spec_.image_width;
  const int h = spec_.image_height;
  const double focal = (w / 2.0) / std::tan(spec_.fov_deg * std::numbers::pi / 360.0);
  Eigen::VectorXd image(static_cast<Eigen::Index>(w) * h);
  const Vec2 origin{pose.x, pose.y};

  for (int c = 0; c < w; ++c) {
    const double offset = std::atan2(w / 2.0 - (c + 0.5), focal);
    const double angle = pose.theta + offset;
    const Vec2 dir{std::cos(angle), std::sin(angle)};

    double best_t = std::numeric_limits<double>::infinity();
    double best_u = 0.0;
    int best_texture = -1;
    for (const auto& seg : segments_) {
      const Vec2 e{seg.b.x - seg.a.x, seg.b.y - seg.a.y};
      const double denom = cross(dir, e);
      if (std::abs(denom) < 1e-12) continue;
      const Vec2 wv{seg.a.x - origin.x, seg.a.y - origin.y};
      const double t = cross(wv, e) / denom;
      const double s = cross(wv, dir) / denom;
      if (t > 1e-9 && s >= 0.0 && s <= 1.0 && t < best_t) {
        best_t = t;
        best_u = s * std::hypot(e.x, e.y);
        best_texture = seg.texture;
      }
    }
    const bool visible = best_texture >= 0 && best_t <= spec_.max_view_distance;
    const double depth = (visible ? best_t : spec_.max_view_distance) * std::cos(offset);

    for (int r = 0; r < h; ++r) {
      const double slope = (h / 2.0 - (r + 0.5)) / focal;
      const double z = spec_.camera_height + slope * depth;
      double value;
      if (z > spec_.wall_height)
        value = kCeilingShade;
      else if (z < 0.0)
        value = kFloorShade;
      else
        value = visible ? texture_value(best_texture, best_u, z) : kFogShade;
      image[static_cast<Eigen::Index>(r) * w + c] = value;
    }
  }
  return image;
}

std::vector<Vec2> World::perimeter_waypoints(int laps) const {
  if (laps < 1) throw std::invalid_argument("perimeter: laps must be >= 1");
  const double xp = block_half_x() + spec_.cross_aisle_width / 2.0;
  const double yp = block_half_y_ + spec_.corridor_width / 2.0;
  std::vector<Vec2> wps{{-xp, -yp}};
  for (int l = 0; l < laps; ++l) {
    wps.push_back({-xp, yp});
    wps.push_back({xp, yp});
    wps.push_back({xp, -yp});
    wps.push_back({-xp, -yp});
  }
  return wps;
}

std::vector<Vec2> World::aisle_waypoints() const {
  const double xp = block_half_x() + spec_.cross_aisle_width / 2.0;
  const double yp = block_half_y_ + spec_.corridor_width / 2.0;
  // Turnarounds hug the shelf ends so the end walls stay at a distance.
  const double xt = block_half_x() + std::min(0.75, spec_.cross_aisle_width / 2.0);
  std::vector<Vec2> wps{{-xp, -yp}};
  for (int i = 0; i < spec_.aisle_count; ++i) {
    const double y = aisle_center_y(i);
    const double from = (i % 2 == 0) ? -xt : xt;
    wps.push_back({from, y});
    wps.push_back({-from, y});
  }
  return wps;
}

World generate_world(const WorldSpec& spec) { return World(spec); }

void FlightPlan::validate() const {
  if (waypoints.size() < 2) throw std::invalid_argument("flight plan: need at least two waypoints");
  if (!(speed > 0 && frame_rate > 0 && turn_rate > 0))
    throw std::invalid_argument("flight plan: speed, frame_rate and turn_rate must be > 0");
  if (!(sigma_xy >= 0 && sigma_theta >= 0))
    throw std::invalid_argument("flight plan: noise must be >= 0");
  if (!(redundancy_bound > 0)) throw std::invalid_argument("flight plan: redundancy_bound must be > 0");
}

double mean_abs_delta(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().mean();
}

FlightRecord simulate_flight(const World& world, const FlightPlan& plan) {
  plan.validate();
  for (const auto& wp : plan.waypoints) {
    if (!world.is_free(wp)) {
      std::ostringstream msg;
      msg << "waypoint (" << wp.x << ", " << wp.y << ") is outside the free space of the world";
      throw std::invalid_argument(msg.str());
    }
  }

  std::vector<Pose2> poses;
  const auto& wps = plan.waypoints;
  double heading = plan.initial_heading.value_or(
      std::atan2(wps[1].y - wps[0].y, wps[1].x - wps[0].x));
  poses.push_back({wps[0].x, wps[0].y, wrap_angle(heading)});

  const double turn_step = plan.turn_rate / plan.frame_rate;
  const double move_step = plan.speed / plan.frame_rate;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const Vec2 a = wps[i];
    const Vec2 b = wps[i + 1];
    const double length = std::hypot(b.x - a.x, b.y - a.y);
    if (length == 0.0) continue;
    const double target = std::atan2(b.y - a.y, b.x - a.x);
    const double delta = wrap_angle(target - heading);
    if (std::abs(delta) > 1e-12) {
      const int ticks = static_cast<int>(std::ceil(std::abs(delta) / turn_step - 1e-9));
      for (int j = 1; j <= ticks; ++j)
        poses.push_back({a.x, a.y, j == ticks ? target : wrap_angle(heading + delta * j / ticks)});
    }
    heading = target;
    const int ticks = std::max(1, static_cast<int>(std::round(length / move_step)));
    for (int j = 1; j <= ticks; ++j) {
      const double f = static_cast<double>(j) / ticks;
      poses.push_back({a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, target});
    }
  }

  FlightRecord rec;
  rec.width = world.spec().image_width;
  rec.height = world.spec().image_height;
  rec.frame_rate = plan.frame_rate;
  rec.seed = world.spec().seed;
  rec.true_poses = poses;

  std::mt19937_64 rng(plan.noise_seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  rec.frames.reserve(poses.size());
  rec.odometry.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const double t = static_cast<double>(k) / plan.frame_rate;
    Frame f;
    f.id = k;
    f.timestamp = t;
    f.width = rec.width;
    f.height = rec.height;
    f.pixels = world.render(poses[k]).unaryExpr(
        [](double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; });
    rec.frames.push_back(std::move(f));

    OdometrySample odo{t, 0.0, 0.0, 0.0};
    if (k > 0) {
      const Pose2 rel = between(poses[k - 1], poses[k]);
      const double nx = unit(rng), ny = unit(rng), nt = unit(rng);
      odo.dx = rel.x + plan.sigma_xy * nx;
      odo.dy = rel.y + plan.sigma_xy * ny;
      odo.dtheta = rel.theta + plan.sigma_theta * nt;
    }
    rec.odometry.push_back(odo);
    rec.ground_truth.points.push_back({t, poses[k].x, poses[k].y});
  }

  for (std::size_t k = 1; k < rec.frames.size(); ++k) {
    const double d = mean_abs_delta(rec.frames[k - 1].pixels, rec.frames[k].pixels);
    if (d > plan.redundancy_bound) {
      std::ostringstream msg;
      msg << "frames " << k - 1 << " and " << k << " differ by " << d
          << " per pixel, above the redundancy bound " << plan.redundancy_bound
          << "; raise the frame rate or lower speed/turn rate";
      throw std::runtime_error(msg.str());
    }
  }
  return rec;
}

double max_consecutive_delta(const FlightRecord& record) {
  double worst = 0.0;
  for (std::size_t k = 1; k < record.frames.size(); ++k)
    worst = std::max(worst, mean_abs_delta(record.frames[k - 1].pixels, record.frames[k].pixels));
  return worst;
}

double mean_pairwise_similarity(const FlightRecord& record, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  std::vector<Eigen::VectorXd> unit;
  for (std::size_t k = 0; k < record.frames.size(); k += stride) {
    const auto& p = record.frames[k].pixels;
    unit.push_back(p / p.norm());
  }
  if (unit.size() < 2) throw std::invalid_argument("need at least two frames");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < unit.size(); ++i)
    for (std::size_t j = i + 1; j < unit.size(); ++j, ++pairs) sum += unit[i].dot(unit[j]);
  return sum / static_cast<double>(pairs);
}

FlightRecord concatenate(const FlightRecord& a, const FlightRecord& b, std::string scenario) {
  if (a.width != b.width || a.height != b.height || a.frame_rate != b.frame_rate)
    throw std::invalid_argument("concatenate: records differ in image size or frame rate");
  FlightRecord out = a;
  out.scenario = std::move(scenario);
  const std::size_t offset = a.frames.size();
  for (std::size_t k = 0; k < b.frames.size(); ++k) {
    const double t = static_cast<double>(offset + k) / a.frame_rate;
    Frame f = b.frames[k];
    f.id = offset + k;
    f.timestamp = t;
    out.frames.push_back(std::move(f));
    OdometrySample odo = b.odometry[k];
    odo.timestamp = t;
    if (k == 0) {
      // Bridge from the last pose of `a` to the first pose of `b`.
      const Pose2 rel = between(a.true_poses.back(), b.true_poses.front());
      odo.dx = rel.x;
      odo.dy = rel.y;
      odo.dtheta = rel.theta;
    }
    out.odometry.push_back(odo);
    auto g = b.ground_truth.points[k];
    g.timestamp = t;
    out.ground_truth.points.push_back(g);
    out.true_poses.push_back(b.true_poses[k]);
  }
  return out;
}

FlightPlan scenario_plan(const std::string& name, const World& world, const ScenarioOptions& options) {
  FlightPlan plan;
  plan.sigma_xy = options.sigma_xy;
  plan.sigma_theta = options.sigma_theta;
  plan.noise_seed = splitmix64(options.seed ^ detail::fnv1a(name));
  if (name == "flight1") {
    plan.waypoints = world.perimeter_waypoints(options.perimeter_laps);
  } else if (name == "flight2") {
    plan.waypoints = world.aisle_waypoints();
    // Same heading flight1 ends with, so flight3 joins without a jump.
    plan.initial_heading = std::numbers::pi;
  } else {
    throw std::invalid_argument("unknown scenario '" + name + "'");
  }
  return plan;
}

FlightRecord make_scenario(const std::string& name, const ScenarioOptions& options) {
  WorldSpec spec = options.world;
  spec.seed = options.seed;
  const World world(spec);
  if (name == "flight3") {
    return concatenate(make_scenario("flight1", options), make_scenario("flight2", options), "flight3");
  }
  FlightRecord rec = simulate_flight(world, scenario_plan(name, world, options));
  rec.scenario = name;
  return rec;
}

std::vector<FlightRecord> builtin_scenarios(const ScenarioOptions& options) {
  return {make_scenario("flight1", options), make_scenario("flight2", options),
          make_scenario("flight3", options)};
}

namespace {

using ScenarioSetter = std::function<void(ScenarioFile&, std::string_view)>;

int as_int(std::string_view v) { return static_cast<int>(detail::parse_int(v)); }

const std::map<std::string, ScenarioSetter, std::less<>>& scenario_setters() {
  static const std::map<std::string, ScenarioSetter, std::less<>> table = {
      {"scenario", [](ScenarioFile& f, std::string_view v) { f.scenario = std::string(v); }},
      {"seed",
       [](ScenarioFile& f, std::string_view v) {
         f.options.seed = static_cast<std::uint64_t>(detail::parse_int(v));
       }},
      {"sigma_xy", [](ScenarioFile& f, std::string_view v) { f.options.sigma_xy = detail::parse_double(v); }},
      {"sigma_theta",
       [](ScenarioFile& f, std::string_view v) { f.options.sigma_theta = detail::parse_double(v); }},
      {"perimeter_laps", [](ScenarioFile& f, std::string_view v) { f.options.perimeter_laps = as_int(v); }},
      {"aisle_count", [](ScenarioFile& f, std::string_view v) { f.options.world.aisle_count = as_int(v); }},
      {"aisle_length",
       [](ScenarioFile& f, std::string_view v) { f.options.world.aisle_length = detail::parse_double(v); }},
      {"texture_bank_size",
       [](ScenarioFile& f, std::string_view v) { f.options.world.texture_bank_size = as_int(v); }},
      {"image_width", [](ScenarioFile& f, std::string_view v) { f.options.world.image_width = as_int(v); }},
      {"image_height", [](ScenarioFile& f, std::string_view v) { f.options.world.image_height = as_int(v); }},
      {"aisle_width",
       [](ScenarioFile& f, std::string_view v) { f.options.world.aisle_width = detail::parse_double(v); }},
      {"shelf_depth",
       [](ScenarioFile& f, std::string_view v) { f.options.world.shelf_depth = detail::parse_double(v); }},
      {"corridor_width",
       [](ScenarioFile& f, std::string_view v) { f.options.world.corridor_width = detail::parse_double(v); }},
      {"cross_aisle_width",
       [](ScenarioFile& f, std::string_view v) { f.options.world.cross_aisle_width = detail::parse_double(v); }},
      {"wall_height",
       [](ScenarioFile& f, std::string_view v) { f.options.world.wall_height = detail::parse_double(v); }},
      {"camera_height",
       [](ScenarioFile& f, std::string_view v) { f.options.world.camera_height = detail::parse_double(v); }},
      {"fov_deg", [](ScenarioFile& f, std::string_view v) { f.options.world.fov_deg = detail::parse_double(v); }},
      {"max_view_distance",
       [](ScenarioFile& f, std::string_view v) { f.options.world.max_view_distance = detail::parse_double(v); }},
  };
  return table;
}

}  // namespace

void apply_scenario_value(ScenarioFile& file, std::string_view key, std::string_view value) {
  key = detail::trim(key);
  value = detail::trim(value);
  const auto& table = scenario_setters();
  const auto it = table.find(key);
  if (it == table.end()) throw std::invalid_argument("unknown scenario key '" + std::string(key) + "'");
  try {
    it->second(file, value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("scenario key '" + std::string(key) + "': " + e.what());
  }
  file.entries.emplace_back(std::string(key), std::string(value));
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read scenario file " + path.string());
  ScenarioFile file;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    apply_scenario_value(file, view.substr(0, eq), view.substr(eq + 1));
  }
  return file;
}

}  // namespace sslam
