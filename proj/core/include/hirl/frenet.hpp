#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "hirl/trajectory.hpp"

namespace hirl {

/// Reference polyline in map coordinates (east, north).
///
/// The lateral direction along segment i is blended linearly between the
/// normals at its two vertices (vertex normal = bisector of the adjacent
/// segment normals). The forward map (s, d) -> point and its inverse are then
/// exact inverses of each other everywhere the offset field does not fold.
class Centerline {
 public:
  explicit Centerline(std::vector<Eigen::Vector2d> points);

  const std::vector<Eigen::Vector2d>& points() const noexcept { return points_; }
  const std::vector<double>& arc_lengths() const noexcept { return arc_; }
  double total_length() const noexcept { return arc_.back(); }
  int segment_count() const noexcept { return static_cast<int>(points_.size()) - 1; }

  /// Map a road coordinate to a point. Throws kExtrapolation outside [0, total_length].
  Eigen::Vector2d to_xy(double s, double d) const;

  struct Projection {
    double s = 0.0;
    double d = 0.0;
  };
  /// Inverse of to_xy. Returns false when no segment admits the point.
  bool project(const Eigen::Vector2d& point, Projection* out) const;

 private:
  Eigen::Vector2d blended_normal(int segment, double u) const;

  std::vector<Eigen::Vector2d> points_;
  std::vector<double> arc_;
  std::vector<Eigen::Vector2d> vertex_normals_;
};

inline constexpr double kDefaultCorridor = 50.0;

/// Project map points onto the centerline. Throws kProjectionFailure (naming
/// the offending index) when a point has no projection within `corridor`.
Trajectory project_to_frenet(const Centerline& centerline,
                             std::span<const Eigen::Vector2d> xy_points, double dt,
                             double corridor = kDefaultCorridor);

std::vector<Eigen::Vector2d> frenet_to_xy(const Centerline& centerline, const Trajectory& traj);

}  // namespace hirl
