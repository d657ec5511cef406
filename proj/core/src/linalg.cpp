#include "hirl/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "hirl/error.hpp"

namespace hirl {

Eigen::MatrixXd ClampedSpectrum::reconstruct() const {
  return vectors * clamped.asDiagonal() * vectors.transpose();
}

double ClampedSpectrum::log_det() const { return clamped.array().log().sum(); }

Eigen::VectorXd ClampedSpectrum::solve(const Eigen::VectorXd& b) const {
  return vectors * (vectors.transpose() * b).cwiseQuotient(clamped);
}

ClampedSpectrum clamp_spectrum(const Eigen::MatrixXd& h, double floor) {
  require(h.rows() == h.cols(), ErrorCode::kContract, "matrix must be square");
  require(h.allFinite(), ErrorCode::kNumericalFailure, "non-finite Hessian");
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  require(eig.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "eigendecomposition failed");
  ClampedSpectrum out;
  out.vectors = eig.eigenvectors();
  out.raw = eig.eigenvalues();
  out.clamped = out.raw.cwiseMax(floor);
  return out;
}

Eigen::MatrixXd regularize(const Eigen::MatrixXd& h, double floor) {
  return clamp_spectrum(h, floor).reconstruct();
}

}  // namespace hirl
