#ifndef SSLAM_DATASET_HPP
#define SSLAM_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sslam/backend.hpp"
#include "sslam/dlsc.hpp"
#include "sslam/eval.hpp"
#include "sslam/synthstream.hpp"

namespace sslam {

/*
  On-disk layout, shared by synthetic and recorded data:

    frames/NNNNNN.pgm   8-bit grayscale (or NNNNNN.ppm for colour), zero-padded index
    odometry.csv        timestamp,dx,dy,dtheta   (one row per frame)
    ground_truth.csv    timestamp,x,y
    meta.json           width, height, frame_rate, seed, scenario [, spec]
*/

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColorMode { gray, rgb };

struct DatasetMeta {
  int width = 0;
  int height = 0;
  double frame_rate = 0.0;
  std::uint64_t seed = 0;
  std::string scenario;
  /// Generator settings echoed into meta.json under "spec".
  std::vector<std::pair<std::string, std::string>> spec;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Frame> frames;
  std::vector<OdometrySample> odometry;
  Trajectory ground_truth;
};

Dataset to_dataset(const FlightRecord& record);

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Throws DatasetError on a missing or malformed file, a frame gap, or size mismatch.
Dataset load_dataset(const std::filesystem::path& dir, ColorMode mode = ColorMode::gray);

std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t index,
                                 const char* extension = ".pgm");

/// Binary PGM (P5, maxval 255). Values are scaled to [0,1].
void write_pgm(const std::filesystem::path& path, int width, int height, const Eigen::VectorXd& pixels);
Frame read_pgm(const std::filesystem::path& path);
/// Binary PPM (P6). `mode` gray converts to luminance, rgb keeps interleaved channels.
Frame read_ppm(const std::filesystem::path& path, ColorMode mode);

std::vector<OdometrySample> read_odometry_csv(const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);
/// Experience positions from a map.csv (experience_id,x,y,theta).
std::vector<MapPoint> read_map_csv(const std::filesystem::path& path);
void write_ground_truth_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace sslam

#endif  // SSLAM_DATASET_HPP
