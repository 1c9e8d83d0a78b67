#include "sslam/backend.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "text_util.hpp"

namespace sslam {

double wrap_angle(double a) {
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

Pose2 compose(const Pose2& a, const Pose2& rel) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return {a.x + rel.x * c - rel.y * s, a.y + rel.x * s + rel.y * c, wrap_angle(a.theta + rel.theta)};
}

Pose2 between(const Pose2& from, const Pose2& to) {
  const double c = std::cos(from.theta);
  const double s = std::sin(from.theta);
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(to.theta - from.theta)};
}

Pose2 inverse(const Pose2& p) { return between(p, Pose2{}); }

Pose2 integrate_odometry(const Pose2& pose, const OdometrySample& odo) {
  return compose(pose, Pose2{odo.dx, odo.dy, odo.dtheta});
}

const char* to_string(LinkKind kind) {
  return kind == LinkKind::odometric ? "odometric" : "loop_closure";
}

void RelaxParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("relax alpha must be in (0,1)");
  if (iterations < 0) throw std::invalid_argument("relax iterations must be >= 0");
}

const Experience& ExperienceMap::experience(std::int64_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= experiences_.size())
    throw std::out_of_range("unknown experience id " + std::to_string(id));
  return experiences_[static_cast<std::size_t>(id)];
}

std::int64_t ExperienceMap::add_experience(const Pose2& pose, double timestamp) {
  const auto id = static_cast<std::int64_t>(experiences_.size());
  experiences_.push_back({id, {pose.x, pose.y, wrap_angle(pose.theta)}, timestamp});
  current_id_ = id;
  return id;
}

void ExperienceMap::add_link(const MapLink& link) {
  experience(link.from_id);
  experience(link.to_id);
  if (link.from_id == link.to_id) throw std::invalid_argument("link endpoints must differ");
  if (!std::isfinite(link.rel_pose.x) || !std::isfinite(link.rel_pose.y) ||
      !std::isfinite(link.rel_pose.theta))
    throw std::invalid_argument("link rel_pose must be finite");
  links_.push_back(link);
}

std::int64_t ExperienceMap::on_sample(const Pose2& pose, double timestamp,
                                      std::optional<std::int64_t> loop_target,
                                      const RelaxParams& params) {
  if (loop_target) experience(*loop_target);
  const auto previous = current_id_;
  const auto id = add_experience(pose, timestamp);
  if (previous)
    add_link({*previous, id, between(experience(*previous).pose, experience(id).pose),
              LinkKind::odometric});
  if (loop_target) {
    // The matcher's exclusion window keeps a sample from matching itself.
    if (*loop_target == id) throw std::logic_error("loop closure onto the new experience");
    add_link({id, *loop_target, Pose2{}, LinkKind::loop_closure});
    ++loop_closures_;
    relax(params);
  }
  return id;
}

namespace {

struct Trig {
  double c = 1.0;
  double s = 0.0;
};

void fill_trig(const std::vector<Experience>& exps, std::vector<Trig>& trig) {
  trig.resize(exps.size());
  for (std::size_t i = 0; i < exps.size(); ++i)
    trig[i] = {std::cos(exps[i].pose.theta), std::sin(exps[i].pose.theta)};
}

// compose() with the rotation of `a` precomputed.
Pose2 compose_cached(const Pose2& a, const Trig& t, const Pose2& rel) {
  return {a.x + rel.x * t.c - rel.y * t.s, a.y + rel.x * t.s + rel.y * t.c,
          wrap_angle(a.theta + rel.theta)};
}

double total_disagreement(const std::vector<MapLink>& links, const std::vector<Experience>& exps,
                          const std::vector<Trig>& trig) {
  double total = 0.0;
  for (const auto& link : links) {
    const auto a = static_cast<std::size_t>(link.from_id);
    const Pose2& b = exps[static_cast<std::size_t>(link.to_id)].pose;
    const Pose2 predicted = compose_cached(exps[a].pose, trig[a], link.rel_pose);
    const double dx = b.x - predicted.x;
    const double dy = b.y - predicted.y;
    const double dt = wrap_angle(b.theta - predicted.theta);
    total += dx * dx + dy * dy + dt * dt;
  }
  return total;
}

}  // namespace

double ExperienceMap::disagreement(const std::vector<Experience>& exps) const {
  std::vector<Trig> trig;
  fill_trig(exps, trig);
  return total_disagreement(links_, exps, trig);
}

double ExperienceMap::disagreement() const { return disagreement(experiences_); }

std::vector<double> ExperienceMap::relax(const RelaxParams& params) {
  params.validate();
  std::vector<double> history{disagreement()};
  if (links_.empty()) return history;

  const std::size_t n = experiences_.size();
  struct Pull {
    double x = 0, y = 0, theta = 0;
    int count = 0;
  };
  std::vector<Pull> pulls(n);
  std::vector<Experience> candidate;
  std::vector<Trig> trig;
  std::vector<Trig> candidate_trig;
  std::vector<Pose2> inverse_rel;
  inverse_rel.reserve(links_.size());
  for (const auto& link : links_) inverse_rel.push_back(inverse(link.rel_pose));

  auto add_pull = [&](std::size_t node, const Pose2& implied) {
    const Pose2& p = experiences_[node].pose;
    pulls[node].x += implied.x - p.x;
    pulls[node].y += implied.y - p.y;
    pulls[node].theta += wrap_angle(implied.theta - p.theta);
    ++pulls[node].count;
  };

  fill_trig(experiences_, trig);
  for (int it = 0; it < params.iterations; ++it) {
    std::fill(pulls.begin(), pulls.end(), Pull{});
    for (std::size_t l = 0; l < links_.size(); ++l) {
      const auto a = static_cast<std::size_t>(links_[l].from_id);
      const auto b = static_cast<std::size_t>(links_[l].to_id);
      add_pull(b, compose_cached(experiences_[a].pose, trig[a], links_[l].rel_pose));
      add_pull(a, compose_cached(experiences_[b].pose, trig[b], inverse_rel[l]));
    }

    double step = params.alpha;
    double objective = history.back();
    bool accepted = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt, step *= 0.5) {
      candidate = experiences_;
      for (std::size_t i = 0; i < n; ++i) {
        if (pulls[i].count == 0) continue;
        const double w = step / pulls[i].count;
        Pose2& p = candidate[i].pose;
        p.x += w * pulls[i].x;
        p.y += w * pulls[i].y;
        p.theta = wrap_angle(p.theta + w * pulls[i].theta);
      }
      fill_trig(candidate, candidate_trig);
      objective = total_disagreement(links_, candidate, candidate_trig);
      accepted = objective <= history.back();
    }
    if (!accepted) break;
    experiences_.swap(candidate);
    trig.swap(candidate_trig);
    history.push_back(objective);
  }
  return history;
}

void ExperienceMap::write_map_csv(std::ostream& out) const {
  out << "experience_id,x,y,theta\n";
  for (const auto& e : experiences_)
    out << e.experience_id << ',' << detail::format_double(e.pose.x) << ','
        << detail::format_double(e.pose.y) << ',' << detail::format_double(e.pose.theta) << '\n';
}

void ExperienceMap::write_links_csv(std::ostream& out) const {
  out << "from,to,kind\n";
  for (const auto& l : links_) out << l.from_id << ',' << l.to_id << ',' << to_string(l.kind) << '\n';
}

MapTracker::MapTracker(RelaxParams params) : params_(params) { params_.validate(); }

Pose2 MapTracker::current_pose() const {
  if (const auto id = map_.current_id()) return compose(map_.experience(*id).pose, offset_);
  return offset_;
}

void MapTracker::on_odometry(const OdometrySample& odo) {
  if (!std::isfinite(odo.dx) || !std::isfinite(odo.dy) || !std::isfinite(odo.dtheta))
    throw std::invalid_argument("odometry sample is not finite");
  offset_ = integrate_odometry(offset_, odo);
}

std::int64_t MapTracker::on_sample(double timestamp, std::optional<std::int64_t> loop_target) {
  const auto id = map_.on_sample(current_pose(), timestamp, loop_target, params_);
  offset_ = Pose2{};
  return id;
}

void MapTracker::record(double timestamp) {
  anchors_.push_back({timestamp, map_.current_id(), offset_, current_pose()});
}

std::vector<MapTracker::TrajectoryRow> MapTracker::corrected_trajectory() const {
  std::vector<TrajectoryRow> rows;
  rows.reserve(anchors_.size());
  for (const auto& a : anchors_) {
    const Pose2 pose =
        a.experience_id ? compose(map_.experience(*a.experience_id).pose, a.offset) : a.offset;
    rows.push_back({a.timestamp, pose});
  }
  return rows;
}

std::vector<MapTracker::TrajectoryRow> MapTracker::online_trajectory() const {
  std::vector<TrajectoryRow> rows;
  rows.reserve(anchors_.size());
  for (const auto& a : anchors_) rows.push_back({a.timestamp, a.online});
  return rows;
}

void write_trajectory_csv(std::ostream& out, const std::vector<MapTracker::TrajectoryRow>& rows) {
  out << "timestamp,x,y,theta\n";
  for (const auto& r : rows)
    out << detail::format_double(r.timestamp) << ',' << detail::format_double(r.pose.x) << ','
        << detail::format_double(r.pose.y) << ',' << detail::format_double(r.pose.theta) << '\n';
}

}  // namespace sslam
