#ifndef SSLAM_SYNTHSTREAM_HPP
#define SSLAM_SYNTHSTREAM_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sslam/backend.hpp"
#include "sslam/dlsc.hpp"
#include "sslam/eval.hpp"

namespace sslam {

/*
  Procedural warehouse: a rectangular room holding one block of parallel shelf
  rows. Aisles run along x between the rows; a corridor runs between the block
  and the outer walls. Shelf faces draw their texture from a small bank (with
  repetition), so distant aisles look alike. Outer-wall panels each get a unique
  texture. The world is centred on the origin.
*/
struct WorldSpec {
  int aisle_count = 4;
  double aisle_length = 9.0;
  int texture_bank_size = 2;
  int image_width = 64;
  int image_height = 48;
  std::uint64_t seed = 1;

  double aisle_width = 1.6;
  double shelf_depth = 0.8;
  double corridor_width = 1.8;     // outer wall to the long side of the block
  double cross_aisle_width = 6.0;  // outer wall to the shelf ends
  double wall_height = 3.0;
  double camera_height = 1.5;
  double fov_deg = 90.0;
  double max_view_distance = 8.0;

  void validate() const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct WallSegment {
  Vec2 a;
  Vec2 b;
  int texture = 0;  // < kWallTextureBase: shelf bank entry; otherwise a unique wall panel
  bool shelf = true;
};

class World {
 public:
  static constexpr int kWallTextureBase = 1000;

  explicit World(const WorldSpec& spec);

  const WorldSpec& spec() const { return spec_; }
  const std::vector<WallSegment>& segments() const { return segments_; }

  /// Grayscale view from `pose`, row-major, values in [0,1]. Pure in (world, pose).
  Eigen::VectorXd render(const Pose2& pose) const;
  double texture_value(int texture, double u, double z) const;

  double room_half_x() const { return room_half_x_; }
  double room_half_y() const { return room_half_y_; }
  double block_half_x() const { return spec_.aisle_length / 2.0; }
  double block_half_y() const { return block_half_y_; }
  double aisle_center_y(int aisle) const;
  /// Inside the room and not inside a shelf row.
  bool is_free(const Vec2& p) const;

  /// Corridor loop around the shelf block, clockwise from the bottom-left corner.
  std::vector<Vec2> perimeter_waypoints(int laps = 1) const;
  /// Serpentine through every aisle, starting at the bottom-left corridor corner.
  std::vector<Vec2> aisle_waypoints() const;

 private:
  WorldSpec spec_;
  double block_half_y_ = 0.0;
  double room_half_x_ = 0.0;
  double room_half_y_ = 0.0;
  std::vector<WallSegment> segments_;
  std::vector<double> wall_shades_;  // base shade per wall panel
};

World generate_world(const WorldSpec& spec);

struct FlightPlan {
  std::vector<Vec2> waypoints;
  double speed = 1.0;            // m/s
  double frame_rate = 10.0;      // Hz
  double turn_rate = 0.3141592653589793;  // rad/s, in-place turns at corners
  std::optional<double> initial_heading;  // default: towards the second waypoint
  double sigma_xy = 0.0;         // odometry noise per tick and axis, m
  double sigma_theta = 0.0;      // odometry heading noise per tick, rad
  std::uint64_t noise_seed = 1;
  double redundancy_bound = 0.15;  // max mean |s_{k+1} - s_k| per pixel

  void validate() const;
};

struct FlightRecord {
  std::string scenario;
  int width = 0;
  int height = 0;
  double frame_rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<Frame> frames;
  std::vector<OdometrySample> odometry;  // odometry[k] moves pose k-1 to pose k; odometry[0] is zero
  Trajectory ground_truth;
  std::vector<Pose2> true_poses;
};

/// Renders one 8-bit-quantised frame per tick along the path and emits noisy
/// odometry. Throws std::invalid_argument for a waypoint outside free space and
/// std::runtime_error when consecutive frames violate plan.redundancy_bound.
FlightRecord simulate_flight(const World& world, const FlightPlan& plan);

/// Mean over pixels of |a - b|.
double mean_abs_delta(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
/// Largest mean_abs_delta between consecutive frames.
double max_consecutive_delta(const FlightRecord& record);
/// Mean cosine similarity over all pairs of every `stride`-th frame.
double mean_pairwise_similarity(const FlightRecord& record, std::size_t stride = 1);

/// Appends `b` to `a`; ids and timestamps continue from `a`.
FlightRecord concatenate(const FlightRecord& a, const FlightRecord& b, std::string scenario);

struct ScenarioOptions {
  std::uint64_t seed = 1;
  WorldSpec world;  // seed overwritten by `seed`
  double sigma_xy = 0.02;
  double sigma_theta = 0.002;
  int perimeter_laps = 2;
};

/// flight1: perimeter laps (diverse views). flight2: serpentine through the aisles
/// (aliased views). flight3: flight1 followed by flight2.
FlightRecord make_scenario(const std::string& name, const ScenarioOptions& options);
std::vector<FlightRecord> builtin_scenarios(const ScenarioOptions& options);
FlightPlan scenario_plan(const std::string& name, const World& world, const ScenarioOptions& options);

/// A scenario name plus generator overrides, read from a flat "key = value" file.
/// Keys: scenario, seed, sigma_xy, sigma_theta, perimeter_laps and every WorldSpec field.
struct ScenarioFile {
  std::string scenario = "flight1";
  ScenarioOptions options;
  /// Entries in file order, echoed into the dataset metadata.
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Throws std::invalid_argument on an unknown key or a malformed value.
void apply_scenario_value(ScenarioFile& file, std::string_view key, std::string_view value);
ScenarioFile load_scenario_file(const std::filesystem::path& path);

}  // namespace sslam

#endif  // SSLAM_SYNTHSTREAM_HPP
