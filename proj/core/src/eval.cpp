#include "sslam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "sslam/backend.hpp"

namespace sslam {

std::vector<double> GridRange::values() const {
  if (!(step > 0.0) || !(max >= min)) throw std::invalid_argument("grid range: need step > 0, max >= min");
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = min + static_cast<double>(i) * step;
    if (std::abs(out[i]) < 1e-9 * step) out[i] = 0.0;  // keep the identity on the grid
  }
  return out;
}

GridSpec GridSpec::default_grid() {
  constexpr double deg = std::numbers::pi / 180.0;
  return {{-10.0, 10.0, 0.1}, {-10.0, 10.0, 0.1}, {-179.0 * deg, 180.0 * deg, deg}};
}

void GridSpec::validate() const {
  for (const GridRange* r : {&tx, &ty, &phi})
    if (!(r->step > 0.0) || !(r->max >= r->min)) throw std::invalid_argument("grid: invalid range");
}

MapPoint apply_transform(const AlignmentTransform& t, const MapPoint& p) {
  const double c = std::cos(t.phi);
  const double s = std::sin(t.phi);
  return {c * p.x - s * p.y + t.tx, s * p.x + c * p.y + t.ty};
}

Trajectory apply_transform(const AlignmentTransform& t, const Trajectory& traj) {
  Trajectory out;
  out.points.reserve(traj.size());
  for (const auto& p : traj.points) {
    const MapPoint q = apply_transform(t, MapPoint{p.x, p.y});
    out.points.push_back({p.timestamp, q.x, q.y});
  }
  return out;
}

AlignmentTransform inverse_transform(const AlignmentTransform& t) {
  // p = R^T (q - t)
  const double c = std::cos(t.phi);
  const double s = std::sin(t.phi);
  return {-(c * t.tx + s * t.ty), -(-s * t.tx + c * t.ty), wrap_angle(-t.phi)};
}

Trajectory match_by_timestamp(const Trajectory& traj, const Trajectory& gt) {
  if (gt.empty()) throw std::invalid_argument("match_by_timestamp: empty ground truth");
  Trajectory out;
  out.points.reserve(traj.size());
  const auto& g = gt.points;
  for (const auto& p : traj.points) {
    auto it = std::lower_bound(g.begin(), g.end(), p.timestamp,
                               [](const TrajectoryPoint& q, double t) { return q.timestamp < t; });
    if (it == g.end()) {
      it = std::prev(g.end());
    } else if (it != g.begin()) {
      const auto before = std::prev(it);
      if (p.timestamp - before->timestamp <= it->timestamp - p.timestamp) it = before;
    }
    out.points.push_back(*it);
  }
  return out;
}

double mae_localisation(const Trajectory& traj, const Trajectory& gt) {
  if (traj.empty() || gt.empty()) throw std::invalid_argument("mae_localisation: empty input");
  if (traj.size() != gt.size()) throw std::invalid_argument("mae_localisation: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k)
    sum += std::abs(traj.points[k].x - gt.points[k].x) + std::abs(traj.points[k].y - gt.points[k].y);
  return sum / static_cast<double>(traj.size());
}

double mae_mapping(const std::vector<MapPoint>& map_points, const Trajectory& gt,
                   MappingNormalization normalization, std::size_t t_end) {
  if (map_points.empty() || gt.empty()) throw std::invalid_argument("mae_mapping: empty input");
  double sum = 0.0;
  for (const auto& m : map_points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : gt.points) best = std::min(best, std::abs(m.x - g.x) + std::abs(m.y - g.y));
    sum += best;
  }
  if (normalization == MappingNormalization::t_end) {
    if (t_end == 0) throw std::invalid_argument("mae_mapping: t_end must be positive");
    return sum / static_cast<double>(t_end);
  }
  return sum / static_cast<double>(map_points.size());
}

namespace {

// Index of the offset minimising sum_k |a_k + offset - b_k|, smallest |offset| on ties.
// With d = sort(b - a) and prefix sums the sum for one offset costs a binary search.
std::pair<std::size_t, double> best_offset(const std::vector<double>& a, const std::vector<double>& b,
                                           const std::vector<double>& offsets,
                                           std::vector<double>& d, std::vector<double>& prefix) {
  const std::size_t n = a.size();
  d.resize(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = b[k] - a[k];
  std::sort(d.begin(), d.end());
  prefix.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + d[k];
  double scale = 0.0;
  for (double v : d) scale += std::abs(v);

  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double o = offsets[i];
    const auto j = static_cast<std::size_t>(std::lower_bound(d.begin(), d.end(), o) - d.begin());
    const double below = o * static_cast<double>(j) - prefix[j];
    const double above = (prefix[n] - prefix[j]) - o * static_cast<double>(n - j);
    const double sum = std::max(0.0, below + above);
    // Rounding in the prefix sums must not split a flat minimum.
    const double tol = 1e-12 * (scale + std::abs(o) * static_cast<double>(n) + 1.0);
    if (sum < best_sum - tol) {
      best = i;
      best_sum = sum;
    } else if (sum <= best_sum + tol && std::abs(o) < std::abs(offsets[best])) {
      best = i;
      best_sum = std::min(sum, best_sum);
    }
  }
  return {best, best_sum};
}

AlignmentResult search(const Trajectory& traj, const Trajectory& gt, const GridSpec& grid) {
  const auto txs = grid.tx.values();
  const auto tys = grid.ty.values();
  const auto phis = grid.phi.values();
  const std::size_t n = traj.size();

  std::vector<double> xr(n), yr(n), gx(n), gy(n), sorted, prefix;
  for (std::size_t k = 0; k < n; ++k) {
    gx[k] = gt.points[k].x;
    gy[k] = gt.points[k].y;
  }

  // The L1 objective separates: for a fixed phi the x and y offsets are independent,
  // so the joint argmin is the pair of per-axis argmins.
  AlignmentResult best{{}, std::numeric_limits<double>::infinity()};
  auto key = [](const AlignmentResult& r) {
    return std::make_tuple(r.mae, std::abs(r.transform.phi), std::abs(r.transform.tx),
                           std::abs(r.transform.ty));
  };
  for (double phi : phis) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& p = traj.points[k];
      xr[k] = c * p.x - s * p.y;
      yr[k] = s * p.x + c * p.y;
    }
    const auto [ix, sx] = best_offset(xr, gx, txs, sorted, prefix);
    const auto [iy, sy] = best_offset(yr, gy, tys, sorted, prefix);
    AlignmentResult candidate{{txs[ix], tys[iy], wrap_angle(phi)}, (sx + sy) / static_cast<double>(n)};
    if (key(candidate) < key(best)) best = candidate;
  }
  return best;
}

}  // namespace

AlignmentResult align_by_grid_search(const Trajectory& traj, const Trajectory& gt,
                                     const GridSpec& grid, int refine_levels) {
  grid.validate();
  if (traj.empty() || traj.size() != gt.size())
    throw std::invalid_argument("align_by_grid_search: trajectories must be non-empty and aligned");

  GridSpec current = grid;
  AlignmentResult best = search(traj, gt, current);
  for (int level = 0; level < refine_levels; ++level) {
    const auto t = best.transform;
    current = {{t.tx - current.tx.step, t.tx + current.tx.step, current.tx.step / 10.0},
               {t.ty - current.ty.step, t.ty + current.ty.step, current.ty.step / 10.0},
               {t.phi - current.phi.step, t.phi + current.phi.step, current.phi.step / 10.0}};
    const AlignmentResult refined = search(traj, gt, current);
    if (refined.mae < best.mae) best = refined;
  }
  best.mae = mae_localisation(apply_transform(best.transform, traj), gt);
  return best;
}

}  // namespace sslam
