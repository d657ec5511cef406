#include "hirl/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hirl/error.hpp"
#include "hirl/linalg.hpp"
#include "parallel.hpp"

namespace hirl {

SolverOptions SolverOptions::from_config(const ModelConfig& config) {
  SolverOptions o;
  o.max_iterations = config.optimizer.mpc_max_iterations;
  o.step_tolerance = config.optimizer.mpc_step_tolerance;
  o.hessian_floor = config.hessian_floor;
  return o;
}

namespace {

// Smoothed cost, +inf when the candidate breaks the car-following order.
double trial_cost(const ContinuousParams& params, const FeatureContext& ctx,
                  const Trajectory& traj) {
  try {
    return cost(params, ctx, traj, CostMode::kSmoothed);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCrossingOrder) return std::numeric_limits<double>::infinity();
    throw;
  }
}

Trajectory initial_guess(const FeatureContext& ctx, int anchors) {
  const Scene& scene = ctx.scene();
  Trajectory traj = Trajectory::constant_velocity(scene.current_position(),
                                                  scene.current_velocity(), ctx.horizon(),
                                                  scene.dt());
  if (ctx.front()) {
    // Stay behind the front vehicle so f_IDM is defined at the start.
    const double margin = ctx.config().idm.jam_distance;
    Eigen::VectorXd& c = traj.mutable_coords();
    for (int t = anchors; t < traj.length(); ++t)
      c[2 * t] = std::min(c[2 * t], std::max(c[2 * t - 2], ctx.front()->x(t) - margin));
  }
  return traj;
}

}  // namespace

SolverResult solve_most_likely(const ContinuousParams& params, const FeatureContext& ctx,
                               const SolverOptions& options,
                               const std::optional<Trajectory>& initial) {
  const int n = ctx.horizon();
  const int anchors = std::clamp(options.anchored_waypoints, 0, n);
  const int offset = 2 * anchors;
  const int free = 2 * n - offset;

  Trajectory traj = initial ? *initial : initial_guess(ctx, anchors);
  require(traj.length() == n, ErrorCode::kContract, "initial trajectory length differs from horizon");
  {
    const Scene& scene = ctx.scene();
    const Eigen::Vector2d p = scene.current_position();
    const Eigen::Vector2d v = scene.current_velocity();
    Eigen::VectorXd& c = traj.mutable_coords();
    for (int t = 0; t < anchors; ++t) c.segment<2>(2 * t) = p + (t == 0 ? 0.0 : t * scene.dt()) * v;
  }

  SolverResult result;
  double f = cost(params, ctx, traj, CostMode::kSmoothed);
  require(std::isfinite(f), ErrorCode::kNumericalFailure,
          "non-finite cost at the initial trajectory for " +
              std::string(to_string(ctx.decision())));
  result.cost_trace.push_back(f);

  for (int iter = 0; iter < options.max_iterations && free > 0; ++iter) {
    const CostReport report = cost_gradient_hessian(params, ctx, traj);
    const Eigen::VectorXd g = report.gradient.tail(free);
    const Eigen::MatrixXd h = report.hessian.bottomRightCorner(free, free);
    const ClampedSpectrum spectrum = clamp_spectrum(h, options.hessian_floor);
    // Relative floor keeps near-singular directions from dominating the step.
    const double floor =
        std::max(options.hessian_floor, 1e-8 * std::max(0.0, spectrum.raw.maxCoeff()));
    ClampedSpectrum reg = spectrum;
    reg.clamped = spectrum.raw.cwiseMax(floor);
    const Eigen::VectorXd step = -reg.solve(g);
    const double slope = g.dot(step);
    ++result.iterations;
    if (!(slope < 0.0)) {
      result.converged = true;
      break;
    }

    double alpha = 1.0;
    bool accepted = false;
    Trajectory candidate = traj;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      candidate.mutable_coords().tail(free) = traj.coords().tail(free) + alpha * step;
      f_new = trial_cost(params, ctx, candidate);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      if (alpha * step.norm() < 1e-12) break;
    }
    if (!accepted) {
      // No decrease available along the Newton direction: local minimum up
      // to round-off.
      result.converged = alpha * step.norm() < options.step_tolerance || g.norm() < 1e-8;
      break;
    }
    traj = candidate;
    f = f_new;
    result.cost_trace.push_back(f);
    if (alpha * step.norm() < options.step_tolerance) {
      result.converged = true;
      break;
    }
  }
  if (free == 0) result.converged = true;

  result.cost = cost(params, ctx, traj, CostMode::kExact);
  require(std::isfinite(result.cost), ErrorCode::kNumericalFailure,
          "non-finite cost at the optimized trajectory");
  result.trajectory = std::move(traj);
  return result;
}

Trajectory most_likely_trajectory(const ContinuousParams& params, const Scene& scene,
                                  Decision decision, int horizon, const ModelConfig& config,
                                  std::shared_ptr<const ContinuousParams> yield_params) {
  require(params.decision == decision, ErrorCode::kInvalidDecision,
          "parameters are for " + std::string(to_string(params.decision)) + ", not " +
              std::string(to_string(decision)));
  const FeatureContext ctx(decision, scene, horizon, config, std::move(yield_params));
  return solve_most_likely(params, ctx, SolverOptions::from_config(config)).trajectory;
}

std::vector<double> softmax_weights(std::span<const double> costs) {
  require(!costs.empty(), ErrorCode::kContract, "no costs to weight");
  const double lowest = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-(costs[i] - lowest));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> trajectory_weights(const ContinuousParams& params, const FeatureContext& ctx,
                                       std::span<const Trajectory> samples) {
  std::vector<double> costs;
  costs.reserve(samples.size());
  for (const Trajectory& s : samples) costs.push_back(trial_cost(params, ctx, s));
  require(std::any_of(costs.begin(), costs.end(), [](double c) { return std::isfinite(c); }),
          ErrorCode::kNumericalFailure, "every sample has infinite cost");
  return softmax_weights(costs);
}

const DecisionPrediction& PredictionMixture::top() const {
  require(!decisions.empty(), ErrorCode::kContract, "empty mixture");
  return *std::max_element(decisions.begin(), decisions.end(),
                           [](const DecisionPrediction& a, const DecisionPrediction& b) {
                             return a.probability < b.probability;
                           });
}

const DecisionPrediction& PredictionMixture::at(Decision decision) const {
  for (const DecisionPrediction& d : decisions)
    if (d.decision == decision) return d;
  fail(ErrorCode::kInvalidDecision,
       "mixture has no entry for " + std::string(to_string(decision)));
}

PredictOptions PredictOptions::from_config(const ModelConfig& config) {
  PredictOptions o;
  o.horizon = config.predict_horizon;
  o.samples = config.samples_per_decision;
  o.sigma = config.sample_sigma;
  return o;
}

PredictionMixture predict(const Scene& scene, const ParameterSet& params,
                          const ModelConfig& config, const PredictOptions& options) {
  const std::array<Decision, 2> candidates = decisions_for(scene.role);
  std::string missing;
  auto note = [&missing](std::string_view what) {
    if (!missing.empty()) missing += ", ";
    missing += what;
  };
  for (Decision d : candidates)
    if (!params.continuous.count(d)) note(to_string(d));
  const bool needs_yield = std::find(candidates.begin(), candidates.end(),
                                     Decision::kMergeFront) != candidates.end();
  if (needs_yield && !params.continuous.count(Decision::kYield)) note("Yield (courtesy)");
  if (!params.discrete.count(scene.role))
    note("discrete " + std::string(to_string(scene.role)));
  require(missing.empty(), ErrorCode::kDependency, "missing models: " + missing);

  const std::shared_ptr<const ContinuousParams> yield = yield_params_of(params.continuous);
  PredictionMixture mixture;
  mixture.role = scene.role;
  mixture.horizon = options.horizon;
  mixture.dt = scene.dt();
  mixture.decisions.resize(candidates.size());

  detail::parallel_for(static_cast<int>(candidates.size()), options.jobs, [&](int i) {
    const Decision d = candidates[static_cast<std::size_t>(i)];
    const ContinuousParams& theta = params.continuous.at(d);
    const FeatureContext ctx(d, scene, options.horizon, config, yield);
    const SolverOptions solver = SolverOptions::from_config(config);
    const SolverResult ml = solve_most_likely(theta, ctx, solver);
    DecisionPrediction& out = mixture.decisions[static_cast<std::size_t>(i)];
    out.decision = d;
    out.most_likely = ml.trajectory;
    out.converged = ml.converged;
    if (config.decision_horizon == options.horizon) {
      out.feature = {d, rotation_angle_feature(ml.trajectory, scene.host_future.head(options.horizon)),
                     ml.cost};
    } else {
      out.feature = decision_feature(d, scene, theta, config, yield);
    }
    out.samples = perturb_samples(ml.trajectory, options.samples, options.sigma,
                                  options.seed + static_cast<std::uint64_t>(d),
                                  solver.anchored_waypoints);
    out.weights = trajectory_weights(theta, ctx, out.samples);
  });

  std::vector<DecisionFeature> features;
  for (const DecisionPrediction& d : mixture.decisions) features.push_back(d.feature);
  const std::vector<double> probs = decision_probabilities(params.discrete.at(scene.role), features);
  for (std::size_t i = 0; i < probs.size(); ++i) mixture.decisions[i].probability = probs[i];
  return mixture;
}

std::vector<PredictionMixture> predict_sensitivity(const Scene& scene, const ParameterSet& params,
                                                   std::span<const Trajectory> host_futures,
                                                   const ModelConfig& config,
                                                   const PredictOptions& options) {
  std::vector<PredictionMixture> out;
  out.reserve(host_futures.size());
  for (const Trajectory& plan : host_futures) {
    Scene s = scene;
    s.host_future = plan;
    out.push_back(predict(s, params, config, options));
  }
  return out;
}

}  // namespace hirl
