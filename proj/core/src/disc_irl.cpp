#include "hirl/disc_irl.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hirl/error.hpp"
#include "hirl/predictor.hpp"
#include "parallel.hpp"

namespace hirl {

Eigen::Vector2d DiscreteParams::standardize(const Eigen::Vector2d& raw) const {
  return (raw - mean).cwiseQuotient(scale);
}

double rotation_angle_feature(const Trajectory& traj, const Trajectory& host) {
  require(traj.length() == host.length(), ErrorCode::kContract,
          "rotation angle needs equal-length trajectories");
  double sum = 0.0;
  for (int t = 0; t < traj.length(); ++t) {
    const double dx = host.x(t) - traj.x(t);
    const double dy = host.y(t) - traj.y(t);
    require(dx != 0.0 || dy != 0.0, ErrorCode::kIllDefinedBearing,
            "host and predicted vehicle coincide at step " + std::to_string(t));
    // Magnitude only: the signed bearing jumps by 2 pi when the host is
    // directly behind, which is where this feature matters most.
    sum += std::abs(std::atan2(dy, dx));
  }
  return sum;
}

std::shared_ptr<const ContinuousParams> yield_params_of(const ContinuousParamSet& params) {
  auto it = params.find(Decision::kYield);
  if (it == params.end()) return nullptr;
  return std::make_shared<const ContinuousParams>(it->second);
}

double min_cost_feature(Decision decision, const Scene& scene, const ContinuousParams& params,
                        const ModelConfig& config,
                        std::shared_ptr<const ContinuousParams> yield_params) {
  return decision_feature(decision, scene, params, config, std::move(yield_params)).f_cost;
}

DecisionFeature decision_feature(Decision decision, const Scene& scene,
                                 const ContinuousParams& params, const ModelConfig& config,
                                 std::shared_ptr<const ContinuousParams> yield_params,
                                 const Trajectory* demonstrated) {
  require(params.decision == decision, ErrorCode::kInvalidDecision,
          "parameters are for " + std::string(to_string(params.decision)) + ", not " +
              std::string(to_string(decision)));
  const int n = config.decision_horizon;
  const FeatureContext ctx(decision, scene, n, config, std::move(yield_params));
  SolverResult ml;
  try {
    ml = solve_most_likely(params, ctx, SolverOptions::from_config(config));
  } catch (const Error& e) {
    fail(e.code(), std::string(to_string(decision)) + ": " + e.what());
  }
  const Trajectory host = scene.host_future.head(n);
  const Trajectory& source = demonstrated ? *demonstrated : ml.trajectory;
  require(source.length() >= n, ErrorCode::kContract,
          "demonstrated trajectory shorter than the decision horizon");
  return {decision, rotation_angle_feature(source.head(n), host), ml.cost};
}

std::vector<double> decision_probabilities(const Eigen::Vector2d& psi,
                                           std::span<const Eigen::Vector2d> features) {
  require(!features.empty(), ErrorCode::kContract, "no candidate decisions");
  std::vector<double> costs;
  costs.reserve(features.size());
  for (const Eigen::Vector2d& f : features) costs.push_back(psi.dot(f));
  return softmax_weights(costs);
}

std::vector<double> decision_probabilities(const DiscreteParams& params,
                                           std::span<const DecisionFeature> features) {
  std::vector<Eigen::Vector2d> z;
  z.reserve(features.size());
  for (const DecisionFeature& f : features) z.push_back(params.standardize(f.vector()));
  return decision_probabilities(params.psi, z);
}

DiscreteSample discrete_sample(const Demonstration& demo, const ContinuousParamSet& params,
                               const ModelConfig& config) {
  const std::array<Decision, 2> candidates = decisions_for(demo.scene.role);
  const std::shared_ptr<const ContinuousParams> yield = yield_params_of(params);
  DiscreteSample sample;
  for (int i = 0; i < 2; ++i) {
    const Decision d = candidates[static_cast<std::size_t>(i)];
    auto it = params.find(d);
    require(it != params.end(), ErrorCode::kDependency,
            "continuous model for " + std::string(to_string(d)) + " not trained");
    const bool chosen = d == demo.decision;
    if (chosen) sample.chosen = i;
    sample.features[static_cast<std::size_t>(i)] =
        decision_feature(d, demo.scene, it->second, config, yield,
                         chosen ? &demo.future : nullptr)
            .vector();
  }
  return sample;
}

DiscreteTrainOptions DiscreteTrainOptions::from_config(const ModelConfig& config) {
  return {config.optimizer.discrete_step, config.optimizer.discrete_max_iterations,
          config.optimizer.discrete_gradient_tolerance};
}

Eigen::Vector2d discrete_gradient(const DiscreteParams& params,
                                  std::span<const DiscreteSample> samples) {
  require(!samples.empty(), ErrorCode::kValidation, "no discrete samples");
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (const DiscreteSample& s : samples) {
    const std::array<Eigen::Vector2d, 2> z{params.standardize(s.features[0]),
                                           params.standardize(s.features[1])};
    const std::vector<double> p = decision_probabilities(params.psi, z);
    grad += z[static_cast<std::size_t>(s.chosen)] - (p[0] * z[0] + p[1] * z[1]);
  }
  return grad / static_cast<double>(samples.size());
}

std::pair<DiscreteParams, DiscreteTrainingRun> train_discrete_features(
    Role role, std::span<const DiscreteSample> samples, const DiscreteTrainOptions& options) {
  require(!samples.empty(), ErrorCode::kValidation, "no discrete samples");
  require(options.step > 0.0 && options.max_iterations >= 1, ErrorCode::kValidation,
          "invalid discrete training options");
  DiscreteParams params;
  params.role = role;

  // z-score over every (sample, candidate) pair
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (const DiscreteSample& s : samples) {
    require(s.chosen == 0 || s.chosen == 1, ErrorCode::kContract, "chosen index out of range");
    require(s.features[0].allFinite() && s.features[1].allFinite(), ErrorCode::kNumericalFailure,
            "non-finite decision feature");
    sum += s.features[0] + s.features[1];
  }
  const double count = 2.0 * static_cast<double>(samples.size());
  params.mean = sum / count;
  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  for (const DiscreteSample& s : samples)
    for (const Eigen::Vector2d& f : s.features) var += (f - params.mean).cwiseAbs2();
  for (int k = 0; k < 2; ++k) {
    const double sd = std::sqrt(var[k] / count);
    params.scale[k] = sd > 1e-12 ? sd : 1.0;
  }

  DiscreteTrainingRun run;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::Vector2d grad = discrete_gradient(params, samples);
    run.gradient_norms.push_back(grad.norm());
    if (grad.norm() < options.gradient_tolerance) {
      run.converged = true;
      break;
    }
    params.psi -= options.step * grad;
    ++run.iterations;
  }
  return {params, run};
}

std::pair<DiscreteParams, DiscreteTrainingRun> train_discrete(
    std::span<const Demonstration> demos, const ContinuousParamSet& params,
    const ModelConfig& config, const DiscreteTrainOptions& options, int jobs) {
  require(!demos.empty(), ErrorCode::kValidation, "no demonstrations for discrete training");
  const Role role = demos.front().scene.role;
  std::vector<DiscreteSample> samples(demos.size());
  detail::parallel_for(static_cast<int>(demos.size()), jobs, [&](int i) {
    const Demonstration& demo = demos[static_cast<std::size_t>(i)];
    require(demo.scene.role == role, ErrorCode::kContract,
            "discrete training mixes roles at demonstration " + std::to_string(i));
    samples[static_cast<std::size_t>(i)] = discrete_sample(demo, params, config);
  });
  return train_discrete_features(role, samples, options);
}

std::vector<Trajectory> perturb_samples(const Trajectory& most_likely, int count, double sigma,
                                        std::uint64_t seed, int anchored_waypoints) {
  require(count >= 1, ErrorCode::kContract, "sample count must be positive");
  require(sigma >= 0.0, ErrorCode::kContract, "sample sigma must be non-negative");
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(most_likely);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int first = 2 * std::clamp(anchored_waypoints, 0, most_likely.length());
  for (int k = 1; k < count; ++k) {
    Trajectory s = most_likely;
    Eigen::VectorXd& c = s.mutable_coords();
    for (Eigen::Index i = first; i < c.size(); ++i) c[i] += sigma * noise(rng);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Trajectory> sample_trajectories(Decision decision, const Scene& scene,
                                            const ContinuousParams& params, int count,
                                            double sigma, std::uint64_t seed,
                                            const ModelConfig& config,
                                            std::shared_ptr<const ContinuousParams> yield_params) {
  const Trajectory ml = most_likely_trajectory(params, scene, decision, config.predict_horizon,
                                               config, std::move(yield_params));
  return perturb_samples(ml, count, sigma, seed, SolverOptions::from_config(config).anchored_waypoints);
}

}  // namespace hirl
