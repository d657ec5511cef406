#include "hirl/frenet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hirl/error.hpp"

namespace hirl {
namespace {

constexpr double kParamTol = 1e-9;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

Eigen::Vector2d left_normal(const Eigen::Vector2d& direction) {
  return Eigen::Vector2d(-direction.y(), direction.x()).normalized();
}

}  // namespace

Centerline::Centerline(std::vector<Eigen::Vector2d> points) : points_(std::move(points)) {
  require(points_.size() >= 2, ErrorCode::kContract, "centerline needs at least two points");
  arc_.reserve(points_.size());
  arc_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = (points_[i] - points_[i - 1]).norm();
    require(len > 0.0 && std::isfinite(len), ErrorCode::kContract,
            "centerline points " + std::to_string(i - 1) + " and " + std::to_string(i) +
                " coincide");
    arc_.push_back(arc_.back() + len);
  }

  const std::size_t n = points_.size();
  vertex_normals_.resize(n);
  vertex_normals_.front() = left_normal(points_[1] - points_[0]);
  vertex_normals_.back() = left_normal(points_[n - 1] - points_[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Eigen::Vector2d bisector =
        left_normal(points_[i] - points_[i - 1]) + left_normal(points_[i + 1] - points_[i]);
    require(bisector.norm() > 1e-9, ErrorCode::kContract,
            "centerline reverses direction at point " + std::to_string(i));
    vertex_normals_[i] = bisector.normalized();
  }
}

Eigen::Vector2d Centerline::blended_normal(int segment, double u) const {
  return ((1.0 - u) * vertex_normals_[segment] + u * vertex_normals_[segment + 1]).normalized();
}

Eigen::Vector2d Centerline::to_xy(double s, double d) const {
  if (s < -kParamTol || s > total_length() + kParamTol) {
    fail(ErrorCode::kExtrapolation, "arc length " + std::to_string(s) + " outside [0, " +
                                        std::to_string(total_length()) + "]");
  }
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  int segment = static_cast<int>(std::distance(arc_.begin(), it)) - 1;
  segment = std::clamp(segment, 0, segment_count() - 1);
  const double len = arc_[segment + 1] - arc_[segment];
  const double u = std::clamp((s - arc_[segment]) / len, 0.0, 1.0);
  const Eigen::Vector2d base = points_[segment] + u * (points_[segment + 1] - points_[segment]);
  return base + d * blended_normal(segment, u);
}

bool Centerline::project(const Eigen::Vector2d& point, Projection* out) const {
  double best_abs_d = std::numeric_limits<double>::infinity();
  bool found = false;

  for (int i = 0; i < segment_count(); ++i) {
    const Eigen::Vector2d seg = points_[i + 1] - points_[i];
    const Eigen::Vector2d w = point - points_[i];
    const Eigen::Vector2d dn = vertex_normals_[i + 1] - vertex_normals_[i];
    // cross(N(u), w - u*seg) = 0 with N(u) = N_i + u*dn
    const double c0 = cross(vertex_normals_[i], w);
    const double c1 = cross(dn, w) - cross(vertex_normals_[i], seg);
    const double c2 = -cross(dn, seg);

    double roots[2];
    int root_count = 0;
    if (std::abs(c2) < 1e-14 * std::max(1.0, std::abs(c1))) {
      if (c1 != 0.0) roots[root_count++] = -c0 / c1;
    } else {
      const double disc = c1 * c1 - 4.0 * c2 * c0;
      if (disc >= 0.0) {
        // numerically stable pair
        const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
        roots[root_count++] = q / c2;
        if (q != 0.0) roots[root_count++] = c0 / q;
      }
    }

    for (int r = 0; r < root_count; ++r) {
      const double u = roots[r];
      if (u < -kParamTol || u > 1.0 + kParamTol) continue;
      const double uc = std::clamp(u, 0.0, 1.0);
      const Eigen::Vector2d base = points_[i] + uc * seg;
      const double d = (point - base).dot(blended_normal(i, uc));
      if (std::abs(d) < best_abs_d) {
        best_abs_d = std::abs(d);
        out->s = arc_[i] + uc * seg.norm();
        out->d = d;
        found = true;
      }
    }
  }
  return found;
}

Trajectory project_to_frenet(const Centerline& centerline,
                             std::span<const Eigen::Vector2d> xy_points, double dt,
                             double corridor) {
  Eigen::VectorXd coords(2 * static_cast<Eigen::Index>(xy_points.size()));
  for (std::size_t i = 0; i < xy_points.size(); ++i) {
    Centerline::Projection p;
    if (!centerline.project(xy_points[i], &p) || std::abs(p.d) > corridor) {
      fail(ErrorCode::kProjectionFailure,
           "point " + std::to_string(i) + " has no projection within the " +
               std::to_string(corridor) + " m corridor");
    }
    coords[2 * i] = p.s;
    coords[2 * i + 1] = p.d;
  }
  return Trajectory(std::move(coords), dt);
}

std::vector<Eigen::Vector2d> frenet_to_xy(const Centerline& centerline, const Trajectory& traj) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(traj.length());
  for (int t = 0; t < traj.length(); ++t) out.push_back(centerline.to_xy(traj.x(t), traj.y(t)));
  return out;
}

}  // namespace hirl
