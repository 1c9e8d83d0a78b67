#ifndef SSLAM_EVAL_HPP
#define SSLAM_EVAL_HPP

#include <cstddef>
#include <vector>

namespace sslam {

struct TrajectoryPoint {
  double timestamp = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct MapPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Rotation by phi about the origin followed by translation (tx, ty).
struct AlignmentTransform {
  double tx = 0.0;
  double ty = 0.0;
  double phi = 0.0;
};

/// Inclusive range min, min + step, ... <= max (a 1e-9 step fraction of slack on the end).
struct GridRange {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
};

struct GridSpec {
  GridRange tx;
  GridRange ty;
  GridRange phi;

  /// tx, ty in [-10, 10] m at 0.1 m; phi over (-pi, pi] at 1 degree.
  static GridSpec default_grid();
  void validate() const;
};

enum class MappingNormalization { map_points, t_end };

Trajectory apply_transform(const AlignmentTransform& t, const Trajectory& traj);
MapPoint apply_transform(const AlignmentTransform& t, const MapPoint& p);
AlignmentTransform inverse_transform(const AlignmentTransform& t);

/// Pairs every trajectory point with the ground-truth point nearest in time (earlier
/// one on ties). Returns the matched ground truth, same length as `traj`.
Trajectory match_by_timestamp(const Trajectory& traj, const Trajectory& gt);

/// Mean over k of |x_k - x_k^gt| + |y_k - y_k^gt|. Sequences must have equal length.
double mae_localisation(const Trajectory& traj, const Trajectory& gt);

/// Sum over map points of the L1 distance to the nearest ground-truth point, divided by
/// the map point count, or by `t_end` when normalization is t_end.
double mae_mapping(const std::vector<MapPoint>& map_points, const Trajectory& gt,
                   MappingNormalization normalization = MappingNormalization::map_points,
                   std::size_t t_end = 0);

struct AlignmentResult {
  AlignmentTransform transform;
  double mae = 0.0;
};

/// Exhaustive search of the grid for the transform minimising
/// mae_localisation(apply_transform(t, traj), gt). Ties are broken by the smallest
/// (|phi|, |tx|, |ty|). `refine_levels` > 0 repeats the search on a 10x finer grid
/// spanning one coarse step around the incumbent.
AlignmentResult align_by_grid_search(const Trajectory& traj, const Trajectory& gt,
                                     const GridSpec& grid, int refine_levels = 0);

}  // namespace sslam

#endif  // SSLAM_EVAL_HPP
