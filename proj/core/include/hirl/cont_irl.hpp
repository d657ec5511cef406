#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/features.hpp"
#include "hirl/scenario.hpp"

namespace hirl {

struct TrainingRun {
  Decision decision = Decision::kMergeBack;
  std::vector<Eigen::VectorXd> theta_trace;  // best restart
  std::vector<double> objective_trace;       // best restart, one entry per accepted iterate
  bool converged = false;
  int iterations = 0;
  std::vector<std::uint64_t> restart_seeds;
  std::vector<double> restart_objectives;
  int best_restart = 0;
};

/// Sum over demonstrations of g^T H~^-1 g - log|H~|, with g and H the cost
/// gradient and Hessian at the demonstrated trajectory restricted to the
/// non-anchored coordinates and H~ the eigenvalue-clamped Hessian.
///
/// Feature derivatives are evaluated once at construction; evaluating the
/// objective for a new theta only reassembles linear combinations.
class LaplaceObjective {
 public:
  LaplaceObjective(std::vector<FeatureId> features, std::span<const Demonstration> demos,
                   const ModelConfig& config,
                   std::shared_ptr<const ContinuousParams> yield_params = nullptr,
                   int anchored_waypoints = 2, int jobs = 1);

  int dimension() const noexcept { return static_cast<int>(features_.size()); }
  int demo_count() const noexcept { return static_cast<int>(demos_.size()); }
  const std::vector<FeatureId>& features() const noexcept { return features_; }

  double value(const Eigen::VectorXd& theta) const;
  /// Objective and its exact gradient in theta (through the eigenvalue clamp).
  double value(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient) const;
  double demo_term(int index, const Eigen::VectorXd& theta,
                   Eigen::VectorXd* gradient = nullptr) const;

 private:
  struct DemoJets {
    std::vector<Eigen::VectorXd> gradients;  // per feature, free coordinates
    std::vector<Eigen::MatrixXd> hessians;
  };

  std::vector<FeatureId> features_;
  std::vector<DemoJets> demos_;
  double floor_;
  int jobs_;
};

double laplace_objective(const ContinuousParams& params, std::span<const Demonstration> demos,
                         const ModelConfig& config,
                         std::shared_ptr<const ContinuousParams> yield_params = nullptr,
                         int anchored_waypoints = 2);

struct TrainOptions {
  /// Overrides the decision's standard feature set.
  std::optional<std::vector<FeatureId>> features;
  /// Required for decisions whose feature set contains the courtesy term.
  std::shared_ptr<const ContinuousParams> yield_params;
  int anchored_waypoints = 2;
  int max_iterations = 500;
  double objective_tolerance = 1e-8;
  int restarts = 3;
  std::uint64_t seed = 0;
  double theta_min = 1e-6;
  double theta_max = 1e8;
  double hessian_floor = 1e-6;
  int jobs = 1;

  static TrainOptions from_config(const ModelConfig& config);
};

/// Minimizes the Laplace objective over theta in [theta_min, theta_max].
///
/// Quasi-Newton (BFGS) steps in log-theta with a projected Armijo backtracking
/// search; the first restart starts from the uniform 1/dim vector, the others
/// from seeded log-normal perturbations of it. The best restart is returned.
std::pair<ContinuousParams, TrainingRun> train_continuous(std::span<const Demonstration> demos,
                                                          Decision decision,
                                                          const ModelConfig& config,
                                                          const TrainOptions& options);

}  // namespace hirl
