#ifndef SSLAM_BACKEND_HPP
#define SSLAM_BACKEND_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace sslam {

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct OdometrySample {
  double timestamp = 0.0;
  double dx = 0.0;  // body frame of the previous pose
  double dy = 0.0;
  double dtheta = 0.0;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// a (+) rel: applies a body-frame displacement to a pose.
Pose2 compose(const Pose2& a, const Pose2& rel);
/// Relative pose of `to` expressed in the frame of `from`, so compose(from, result) == to.
Pose2 between(const Pose2& from, const Pose2& to);
Pose2 inverse(const Pose2& p);

Pose2 integrate_odometry(const Pose2& pose, const OdometrySample& odo);

struct Experience {
  std::int64_t experience_id = 0;
  Pose2 pose;
  double created_at = 0.0;
};

enum class LinkKind { odometric, loop_closure };

const char* to_string(LinkKind kind);

struct MapLink {
  std::int64_t from_id = 0;
  std::int64_t to_id = 0;
  Pose2 rel_pose;  // pose of `to` in the frame of `from`
  LinkKind kind = LinkKind::odometric;
};

struct RelaxParams {
  double alpha = 0.5;
  int iterations = 20;

  void validate() const;
};

/// RatSLAM-style experience graph corrected by iterative relaxation.
class ExperienceMap {
 public:
  /// Creates an experience at `pose`, chained odometrically to the previous one. A
  /// loop-closure target adds a zero-offset link to that experience and relaxes the map.
  std::int64_t on_sample(const Pose2& pose, double timestamp,
                         std::optional<std::int64_t> loop_target, const RelaxParams& params);

  /// Jacobi-style relaxation. Each experience moves by alpha times the mean offset
  /// towards the poses implied by its links. A step that would raise the total
  /// disagreement is retried with a halved step. Returns the disagreement before the
  /// first iteration and after each one.
  std::vector<double> relax(const RelaxParams& params);

  /// Sum over links of squared position and wrapped angle disagreement.
  double disagreement() const;

  const std::vector<Experience>& experiences() const { return experiences_; }
  const std::vector<MapLink>& links() const { return links_; }
  const Experience& experience(std::int64_t id) const;
  std::optional<std::int64_t> current_id() const { return current_id_; }
  std::size_t loop_closures() const { return loop_closures_; }

  /// Adds a link between existing experiences without relaxing.
  void add_link(const MapLink& link);
  /// Adds an experience without any link.
  std::int64_t add_experience(const Pose2& pose, double timestamp);

  void write_map_csv(std::ostream& out) const;
  void write_links_csv(std::ostream& out) const;

 private:
  double disagreement(const std::vector<Experience>& exps) const;

  std::vector<Experience> experiences_;
  std::vector<MapLink> links_;
  std::optional<std::int64_t> current_id_;
  std::size_t loop_closures_ = 0;
};

/// Tracks the current pose relative to the latest experience and records every
/// odometry tick so the trajectory can be exported against the corrected map.
class MapTracker {
 public:
  explicit MapTracker(RelaxParams params = {});

  void on_odometry(const OdometrySample& odo);
  std::int64_t on_sample(double timestamp, std::optional<std::int64_t> loop_target);
  /// Records the pose at `timestamp` (one row per processed odometry sample).
  void record(double timestamp);

  Pose2 current_pose() const;
  const ExperienceMap& map() const { return map_; }

  struct TrajectoryRow {
    double timestamp;
    Pose2 pose;
  };
  /// Recorded poses re-anchored on the final (relaxed) experience poses.
  std::vector<TrajectoryRow> corrected_trajectory() const;
  /// Poses as they were estimated online, at the time they were recorded.
  std::vector<TrajectoryRow> online_trajectory() const;

 private:
  struct Anchor {
    double timestamp;
    std::optional<std::int64_t> experience_id;
    Pose2 offset;
    Pose2 online;
  };

  RelaxParams params_;
  ExperienceMap map_;
  Pose2 offset_;  // relative to the current experience, or to the origin before the first
  std::vector<Anchor> anchors_;
};

void write_trajectory_csv(std::ostream& out, const std::vector<MapTracker::TrajectoryRow>& rows);

}  // namespace sslam

#endif  // SSLAM_BACKEND_HPP
