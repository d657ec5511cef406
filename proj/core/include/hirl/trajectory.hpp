#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace hirl {

/// Planar trajectory in road (Frenet) coordinates sampled at a fixed timestep.
///
/// Coordinates are stored flat as [x_0, y_0, x_1, y_1, ...]; x is arc length
/// along the reference line and y the signed lateral offset (left positive).
/// At least three waypoints are required so that jerk is defined.
class Trajectory {
 public:
  static constexpr int kMinLength = 3;

  Trajectory() = default;
  Trajectory(Eigen::VectorXd coords, double dt);

  static Trajectory from_points(std::span<const Eigen::Vector2d> points, double dt);

  int length() const noexcept { return static_cast<int>(coords_.size() / 2); }
  double dt() const noexcept { return dt_; }
  double duration() const noexcept { return dt_ * (length() - 1); }

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::VectorXd& mutable_coords() noexcept { return coords_; }

  double x(int t) const { return coords_[2 * t]; }
  double y(int t) const { return coords_[2 * t + 1]; }
  Eigen::Vector2d point(int t) const { return {coords_[2 * t], coords_[2 * t + 1]}; }

  std::vector<Eigen::Vector2d> points() const;

  /// First `n` waypoints (n >= kMinLength, n <= length()).
  Trajectory head(int n) const;

  /// Final-waypoint velocity estimate from the last two waypoints.
  Eigen::Vector2d terminal_velocity() const;

  /// Constant-velocity rollout of `n` waypoints starting at `start`.
  static Trajectory constant_velocity(const Eigen::Vector2d& start, const Eigen::Vector2d& velocity,
                                      int n, double dt);

  bool operator==(const Trajectory& other) const = default;

 private:
  Eigen::VectorXd coords_;
  double dt_ = 0.1;
};

/// Per-waypoint kinematics recovered by forward differences.
///
/// The scalar sequences differentiate the speed; the vector sequences
/// differentiate each Frenet axis separately and coincide with the scalar
/// ones for motion along a single axis.
struct KinematicProfile {
  Eigen::VectorXd speeds;         // L
  Eigen::VectorXd accelerations;  // L
  Eigen::VectorXd jerks;          // L - 1, jerks[i] belongs to waypoint i + 1
  Eigen::VectorXd headings;       // L, radians
  Eigen::MatrixX2d velocity_vectors;      // L x 2
  Eigen::MatrixX2d acceleration_vectors;  // L x 2
  Eigen::MatrixX2d jerk_vectors;          // (L - 1) x 2
};

/// Forward differences with the last value held.
///
/// v_t = |p_{t+1} - p_t| / dt for t < L-1, v_{L-1} = v_{L-2}. Accelerations are
/// forward differences of the L-1 measured speeds, with a_{L-2} and a_{L-1}
/// holding a_{L-3}. Jerk is (a_t - a_{t-1}) / dt for t = 1..L-1.
KinematicProfile differentiate(const Trajectory& traj);

/// L x L operator mapping speeds to accelerations under the hold convention.
/// Only speeds 0..L-2 carry weight (v_{L-1} is a copy of v_{L-2}).
Eigen::MatrixXd acceleration_operator(int length, double dt);

/// (L-1) x L operator mapping accelerations to jerks.
Eigen::MatrixXd jerk_operator(int length, double dt);

/// L x L operator mapping positions along one axis to velocities (last held).
Eigen::MatrixXd velocity_operator(int length, double dt);

/// Lifts a per-axis operator to the interleaved [x0, y0, x1, y1, ...] layout.
Eigen::MatrixXd interleaved(const Eigen::MatrixXd& per_axis);

/// Throws kDegenerateTrajectory / kContract on invariant violations.
void validate(const Trajectory& traj);

}  // namespace hirl
