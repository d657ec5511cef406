#include "hirl/trajectory.hpp"

#include <cmath>
#include <string>

#include "hirl/error.hpp"

namespace hirl {

Trajectory::Trajectory(Eigen::VectorXd coords, double dt) : coords_(std::move(coords)), dt_(dt) {
  validate(*this);
}

Trajectory Trajectory::from_points(std::span<const Eigen::Vector2d> points, double dt) {
  Eigen::VectorXd coords(2 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t t = 0; t < points.size(); ++t) coords.segment<2>(2 * t) = points[t];
  return Trajectory(std::move(coords), dt);
}

std::vector<Eigen::Vector2d> Trajectory::points() const {
  std::vector<Eigen::Vector2d> out;
  out.reserve(length());
  for (int t = 0; t < length(); ++t) out.push_back(point(t));
  return out;
}

Trajectory Trajectory::head(int n) const {
  require(n >= kMinLength && n <= length(), ErrorCode::kOutOfRange,
          "head(" + std::to_string(n) + ") of trajectory with " + std::to_string(length()) +
              " waypoints");
  return Trajectory(coords_.head(2 * n), dt_);
}

Eigen::Vector2d Trajectory::terminal_velocity() const {
  const int n = length();
  return (point(n - 1) - point(n - 2)) / dt_;
}

Trajectory Trajectory::constant_velocity(const Eigen::Vector2d& start,
                                         const Eigen::Vector2d& velocity, int n, double dt) {
  Eigen::VectorXd coords(2 * n);
  for (int t = 0; t < n; ++t) coords.segment<2>(2 * t) = start + velocity * (t * dt);
  return Trajectory(std::move(coords), dt);
}

void validate(const Trajectory& traj) {
  require(traj.coords().size() % 2 == 0, ErrorCode::kContract,
          "trajectory coordinate count must be even");
  require(traj.length() >= Trajectory::kMinLength, ErrorCode::kDegenerateTrajectory,
          "trajectory needs at least 3 waypoints, got " + std::to_string(traj.length()));
  require(traj.dt() > 0.0 && std::isfinite(traj.dt()), ErrorCode::kContract,
          "trajectory dt must be positive");
}

KinematicProfile differentiate(const Trajectory& traj) {
  validate(traj);
  const int n = traj.length();
  const double dt = traj.dt();

  KinematicProfile out;
  out.speeds.resize(n);
  out.headings.resize(n);
  for (int t = 0; t + 1 < n; ++t) {
    const Eigen::Vector2d d = traj.point(t + 1) - traj.point(t);
    out.speeds[t] = d.norm() / dt;
    out.headings[t] = std::atan2(d.y(), d.x());
  }
  out.speeds[n - 1] = out.speeds[n - 2];
  out.headings[n - 1] = out.headings[n - 2];

  out.accelerations.resize(n);
  for (int t = 0; t + 2 < n; ++t) out.accelerations[t] = (out.speeds[t + 1] - out.speeds[t]) / dt;
  out.accelerations[n - 2] = out.accelerations[n - 3];
  out.accelerations[n - 1] = out.accelerations[n - 3];

  out.jerks.resize(n - 1);
  for (int t = 1; t < n; ++t)
    out.jerks[t - 1] = (out.accelerations[t] - out.accelerations[t - 1]) / dt;

  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> p(
      traj.coords().data(), n, 2);
  out.velocity_vectors = velocity_operator(n, dt) * p;
  out.acceleration_vectors = acceleration_operator(n, dt) * out.velocity_vectors;
  out.jerk_vectors = jerk_operator(n, dt) * out.acceleration_vectors;
  return out;
}

Eigen::MatrixXd velocity_operator(int length, double dt) {
  require(length >= 2, ErrorCode::kDegenerateTrajectory, "velocity operator needs L >= 2");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(length, length);
  for (int t = 0; t + 1 < length; ++t) {
    d(t, t) = -1.0 / dt;
    d(t, t + 1) = 1.0 / dt;
  }
  d.row(length - 1) = d.row(length - 2);
  return d;
}

Eigen::MatrixXd interleaved(const Eigen::MatrixXd& per_axis) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * per_axis.rows(), 2 * per_axis.cols());
  for (Eigen::Index i = 0; i < per_axis.rows(); ++i)
    for (Eigen::Index j = 0; j < per_axis.cols(); ++j) {
      out(2 * i, 2 * j) = per_axis(i, j);
      out(2 * i + 1, 2 * j + 1) = per_axis(i, j);
    }
  return out;
}

Eigen::MatrixXd acceleration_operator(int length, double dt) {
  require(length >= Trajectory::kMinLength, ErrorCode::kDegenerateTrajectory,
          "acceleration operator needs L >= 3");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(length, length);
  for (int t = 0; t + 2 < length; ++t) {
    a(t, t) = -1.0 / dt;
    a(t, t + 1) = 1.0 / dt;
  }
  a.row(length - 2) = a.row(length - 3);
  a.row(length - 1) = a.row(length - 3);
  return a;
}

Eigen::MatrixXd jerk_operator(int length, double dt) {
  require(length >= Trajectory::kMinLength, ErrorCode::kDegenerateTrajectory,
          "jerk operator needs L >= 3");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(length - 1, length);
  for (int t = 1; t < length; ++t) {
    j(t - 1, t) = 1.0 / dt;
    j(t - 1, t - 1) = -1.0 / dt;
  }
  return j;
}

}  // namespace hirl
