#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/disc_irl.hpp"
#include "hirl/features.hpp"
#include "hirl/scenario.hpp"
#include "hirl/trajectory.hpp"

namespace hirl {

struct SolverOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-6;
  /// Waypoint 0 is the current position, waypoint 1 continues the current velocity.
  int anchored_waypoints = 2;
  double hessian_floor = 1e-6;

  static SolverOptions from_config(const ModelConfig& config);
};

struct SolverResult {
  Trajectory trajectory;
  double cost = 0.0;  // exact cost
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;  // smoothed cost at accepted iterates
};

/// Minimizes the decision's cost over free waypoints by Gauss-Newton steps on
/// the clamped Hessian with Armijo backtracking. Starts from the
/// constant-velocity rollout unless `initial` is given. On non-convergence the
/// best iterate is returned with converged = false.
SolverResult solve_most_likely(const ContinuousParams& params, const FeatureContext& ctx,
                               const SolverOptions& options,
                               const std::optional<Trajectory>& initial = std::nullopt);

Trajectory most_likely_trajectory(const ContinuousParams& params, const Scene& scene,
                                  Decision decision, int horizon, const ModelConfig& config,
                                  std::shared_ptr<const ContinuousParams> yield_params = nullptr);

/// Normalized exp(-cost) weights.
std::vector<double> softmax_weights(std::span<const double> costs);
std::vector<double> trajectory_weights(const ContinuousParams& params, const FeatureContext& ctx,
                                       std::span<const Trajectory> samples);

/// Everything needed for inference on both roles.
struct ParameterSet {
  ContinuousParamSet continuous;
  std::map<Role, DiscreteParams> discrete;

  bool operator==(const ParameterSet&) const = default;
};

struct DecisionPrediction {
  Decision decision = Decision::kMergeBack;
  double probability = 0.0;
  DecisionFeature feature;
  Trajectory most_likely;
  bool converged = false;
  std::vector<Trajectory> samples;
  std::vector<double> weights;
};

struct PredictionMixture {
  Role role = Role::kMerging;
  int horizon = 0;
  double dt = 0.0;
  std::vector<DecisionPrediction> decisions;

  const DecisionPrediction& top() const;
  const DecisionPrediction& at(Decision decision) const;
  double probability(Decision decision) const { return at(decision).probability; }
};

struct PredictOptions {
  int horizon = 30;
  int samples = 100;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  int jobs = 1;

  static PredictOptions from_config(const ModelConfig& config);
};

/// Throws kDependency listing every absent model needed for the scene role.
PredictionMixture predict(const Scene& scene, const ParameterSet& params,
                          const ModelConfig& config, const PredictOptions& options);

/// One mixture per candidate host plan.
std::vector<PredictionMixture> predict_sensitivity(const Scene& scene, const ParameterSet& params,
                                                   std::span<const Trajectory> host_futures,
                                                   const ModelConfig& config,
                                                   const PredictOptions& options);

}  // namespace hirl
