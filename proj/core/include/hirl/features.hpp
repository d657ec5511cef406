#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/scenario.hpp"
#include "hirl/trajectory.hpp"

namespace hirl {

/// Learned weights of one decision's continuous cost, bound to a feature order.
struct ContinuousParams {
  Decision decision = Decision::kMergeBack;
  std::vector<FeatureId> features;
  Eigen::VectorXd theta;

  static ContinuousParams for_decision(Decision decision, Eigen::VectorXd theta);
  int dimension() const noexcept { return static_cast<int>(features.size()); }
  bool operator==(const ContinuousParams&) const = default;
};

struct FeatureVector {
  std::vector<FeatureId> features;
  Eigen::VectorXd values;
};

/// Value, gradient and Hessian of a scalar with respect to the 2L trajectory
/// coordinates.
struct FeatureJet {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;

  explicit FeatureJet(int dim = 0)
      : gradient(Eigen::VectorXd::Zero(dim)), hessian(Eigen::MatrixXd::Zero(dim, dim)) {}
};

struct CostReport {
  double cost = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// ---------------------------------------------------------------------------
// Individual features (values only).

double f_speed(const Trajectory& traj, double v_lim);
/// Throws kCrossingOrder when the front vehicle is not ahead at some step.
double f_idm(const Trajectory& traj, const Trajectory& front, const IdmConfig& idm);
/// Squared acceleration and jerk vectors summed over both Frenet axes.
double f_acc(const Trajectory& traj);
double f_jerk(const Trajectory& traj);
double f_dist(const Trajectory& traj, std::span<const Trajectory> others, const VehicleDims& dims);
double f_goal(const Trajectory& traj, const Eigen::VectorXd& goals);

/// IDM spatial headway s_j + v T + v (v - v_front) / (2 sqrt(a b)), floored at s_j.
double idm_desired_gap(double v, double v_front, const IdmConfig& idm);

/// Host's default behaviour: IDM car following behind its own leader (free
/// road when it has none), lateral position held.
Trajectory idm_rollout(const Scene& scene, int horizon, const ModelConfig& config);

// ---------------------------------------------------------------------------
// Evaluation context: everything about a (decision, scene, horizon) triple
// that does not depend on the predicted trajectory.

class FeatureContext {
 public:
  FeatureContext(Decision decision, const Scene& scene, int horizon, const ModelConfig& config,
                 std::shared_ptr<const ContinuousParams> yield_params = nullptr);

  Decision decision() const noexcept { return decision_; }
  int horizon() const noexcept { return horizon_; }
  const Scene& scene() const noexcept { return *scene_; }
  const ModelConfig& config() const noexcept { return config_; }

  const Eigen::VectorXd& goals() const noexcept { return goals_; }
  /// Host future followed by extrapolated surroundings.
  const std::vector<Trajectory>& others() const noexcept { return others_; }
  const std::optional<Trajectory>& front() const noexcept { return front_; }
  const std::shared_ptr<const ContinuousParams>& yield_params() const noexcept {
    return yield_params_;
  }

  /// Host cost under Yield weights with the predicted vehicle following traj.
  double host_cost(const Trajectory& traj) const;
  /// Host cost of the default IDM rollout, predicted vehicle ignored.
  double host_default_cost(const Trajectory& traj) const;

 private:
  friend FeatureJet courtesy_jet(const FeatureContext& ctx, const Trajectory& traj);

  Decision decision_;
  int horizon_;
  std::shared_ptr<const Scene> scene_;
  ModelConfig config_;
  std::shared_ptr<const ContinuousParams> yield_params_;
  Eigen::VectorXd goals_;
  std::vector<Trajectory> others_;
  std::optional<Trajectory> front_;

  // courtesy basis
  Trajectory host_path_;
  Trajectory rollout_;
  std::vector<Trajectory> surround_;
};

/// max{C_H(traj) - C_H^default, 0}; throws kDependency without Yield weights.
double f_courtesy(const FeatureContext& ctx, const Trajectory& traj);
double f_courtesy(const Trajectory& traj, const Scene& scene,
                  std::shared_ptr<const ContinuousParams> yield_params, const ModelConfig& config);

double feature_value(FeatureId feature, const FeatureContext& ctx, const Trajectory& traj);
FeatureVector feature_vector(std::span<const FeatureId> features, const FeatureContext& ctx,
                             const Trajectory& traj);

/// Derivatives of one feature. The courtesy clamp is replaced by a softplus of
/// the configured sharpness; all other features are differentiated exactly.
FeatureJet feature_jet(FeatureId feature, const FeatureContext& ctx, const Trajectory& traj);
std::vector<FeatureJet> feature_jets(std::span<const FeatureId> features,
                                     const FeatureContext& ctx, const Trajectory& traj);

enum class CostMode {
  kExact,     // courtesy uses the hard max
  kSmoothed,  // courtesy uses softplus; the function cost_gradient_hessian differentiates
};

double cost(const ContinuousParams& params, const FeatureContext& ctx, const Trajectory& traj,
            CostMode mode = CostMode::kExact);

/// Cost value (smoothed mode), gradient and Hessian over the 2L coordinates.
/// Throws kNumericalFailure on non-finite entries.
CostReport cost_gradient_hessian(const ContinuousParams& params, const FeatureContext& ctx,
                                 const Trajectory& traj);

}  // namespace hirl
