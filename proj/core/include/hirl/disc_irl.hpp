#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/features.hpp"
#include "hirl/scenario.hpp"

namespace hirl {

/// Weights over the decision features [f_angle, f_cost] of one role, plus the
/// z-score constants applied to raw features before the softmax.
struct DiscreteParams {
  Role role = Role::kMerging;
  Eigen::Vector2d psi = Eigen::Vector2d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d scale = Eigen::Vector2d::Ones();

  Eigen::Vector2d standardize(const Eigen::Vector2d& raw) const;
  bool operator==(const DiscreteParams&) const = default;
};

struct DecisionFeature {
  Decision decision = Decision::kMergeBack;
  double f_angle = 0.0;
  double f_cost = 0.0;

  Eigen::Vector2d vector() const { return {f_angle, f_cost}; }
};

/// Sum over steps of the unsigned bearing of `host` seen from `traj`, each in
/// [0, pi]: 0 with the host dead ahead, pi with it directly behind.
/// Throws kIllDefinedBearing when the two positions coincide.
double rotation_angle_feature(const Trajectory& traj, const Trajectory& host);

using ContinuousParamSet = std::map<Decision, ContinuousParams>;

/// Yield weights as needed by the courtesy term, or null when absent.
std::shared_ptr<const ContinuousParams> yield_params_of(const ContinuousParamSet& params);

/// Exact cost of the most-likely trajectory over config.decision_horizon.
double min_cost_feature(Decision decision, const Scene& scene, const ContinuousParams& params,
                        const ModelConfig& config,
                        std::shared_ptr<const ContinuousParams> yield_params = nullptr);

/// Both decision features over config.decision_horizon. The angle uses
/// `demonstrated` when given and the most-likely trajectory otherwise.
DecisionFeature decision_feature(Decision decision, const Scene& scene,
                                 const ContinuousParams& params, const ModelConfig& config,
                                 std::shared_ptr<const ContinuousParams> yield_params = nullptr,
                                 const Trajectory* demonstrated = nullptr);

/// Softmax of -psi^T f over the candidates, max-subtracted.
std::vector<double> decision_probabilities(const Eigen::Vector2d& psi,
                                           std::span<const Eigen::Vector2d> features);
/// Standardizes raw features with the stored constants first.
std::vector<double> decision_probabilities(const DiscreteParams& params,
                                           std::span<const DecisionFeature> features);

/// Raw decision features of both candidates of a role (decisions_for order)
/// and the index of the demonstrated one.
struct DiscreteSample {
  std::array<Eigen::Vector2d, 2> features;
  int chosen = 0;
};

DiscreteSample discrete_sample(const Demonstration& demo, const ContinuousParamSet& params,
                               const ModelConfig& config);

struct DiscreteTrainOptions {
  double step = 0.05;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;

  static DiscreteTrainOptions from_config(const ModelConfig& config);
};

struct DiscreteTrainingRun {
  std::vector<double> gradient_norms;
  int iterations = 0;
  bool converged = false;
};

/// Mean over samples of z(chosen) - E_P[z], in standardized units; the
/// negative log-likelihood gradient.
Eigen::Vector2d discrete_gradient(const DiscreteParams& params,
                                  std::span<const DiscreteSample> samples);

std::pair<DiscreteParams, DiscreteTrainingRun> train_discrete_features(
    Role role, std::span<const DiscreteSample> samples, const DiscreteTrainOptions& options);

/// Computes per-demonstration features (embedding one trajectory optimization
/// per non-demonstrated candidate and one per f_cost) then fits psi.
std::pair<DiscreteParams, DiscreteTrainingRun> train_discrete(
    std::span<const Demonstration> demos, const ContinuousParamSet& params,
    const ModelConfig& config, const DiscreteTrainOptions& options, int jobs = 1);

/// The most-likely trajectory and K - 1 copies with Gaussian noise on every
/// coordinate except the anchored initial waypoints.
std::vector<Trajectory> sample_trajectories(Decision decision, const Scene& scene,
                                            const ContinuousParams& params, int count,
                                            double sigma, std::uint64_t seed,
                                            const ModelConfig& config,
                                            std::shared_ptr<const ContinuousParams> yield_params =
                                                nullptr);
std::vector<Trajectory> perturb_samples(const Trajectory& most_likely, int count, double sigma,
                                        std::uint64_t seed, int anchored_waypoints = 2);

}  // namespace hirl
