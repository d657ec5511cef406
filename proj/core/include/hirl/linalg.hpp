#pragma once

#include <Eigen/Core>

namespace hirl {

inline constexpr double kDefaultHessianFloor = 1e-6;

/// Symmetric eigendecomposition with eigenvalues clamped from below.
struct ClampedSpectrum {
  Eigen::MatrixXd vectors;  // columns are eigenvectors
  Eigen::VectorXd raw;      // ascending
  Eigen::VectorXd clamped;  // max(raw, floor)

  Eigen::MatrixXd reconstruct() const;
  double log_det() const;
  /// Solves reconstruct() * x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
};

/// Throws kNumericalFailure on non-finite input.
ClampedSpectrum clamp_spectrum(const Eigen::MatrixXd& h, double floor = kDefaultHessianFloor);

/// Nearest-in-spectrum positive-definite matrix: V max(Lambda, floor) V^T.
Eigen::MatrixXd regularize(const Eigen::MatrixXd& h, double floor = kDefaultHessianFloor);

}  // namespace hirl
