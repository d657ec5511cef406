#include "hirl/cont_irl.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "hirl/error.hpp"
#include "parallel.hpp"

namespace hirl {

LaplaceObjective::LaplaceObjective(std::vector<FeatureId> features,
                                   std::span<const Demonstration> demos,
                                   const ModelConfig& config,
                                   std::shared_ptr<const ContinuousParams> yield_params,
                                   int anchored_waypoints, int jobs)
    : features_(std::move(features)), floor_(config.hessian_floor), jobs_(jobs) {
  require(!demos.empty(), ErrorCode::kValidation, "no demonstrations");
  require(!features_.empty(), ErrorCode::kContract, "empty feature set");
  require(anchored_waypoints >= 0, ErrorCode::kContract, "negative anchor count");
  const Decision decision = demos.front().decision;
  const bool needs_yield =
      std::find(features_.begin(), features_.end(), FeatureId::kCourtesy) != features_.end();
  require(!needs_yield || yield_params != nullptr, ErrorCode::kDependency,
          "f_court requires trained Yield weights");

  demos_.resize(demos.size());
  detail::parallel_for(static_cast<int>(demos.size()), jobs_, [&](int i) {
    const Demonstration& demo = demos[static_cast<std::size_t>(i)];
    require(demo.decision == decision, ErrorCode::kInvalidDecision,
            "demonstration " + std::to_string(i) + " has decision " +
                std::string(to_string(demo.decision)) + ", expected " +
                std::string(to_string(decision)));
    const int n = demo.future.length();
    require(n > anchored_waypoints, ErrorCode::kContract,
            "demonstration " + std::to_string(i) + " has no free waypoints");
    const FeatureContext ctx(decision, demo.scene, n, config, yield_params);
    const int offset = 2 * anchored_waypoints;
    const int free = 2 * n - offset;
    DemoJets& out = demos_[static_cast<std::size_t>(i)];
    for (FeatureId f : features_) {
      const FeatureJet jet = feature_jet(f, ctx, demo.future);
      require(jet.gradient.allFinite() && jet.hessian.allFinite(), ErrorCode::kNumericalFailure,
              "non-finite feature derivatives for demonstration " + std::to_string(i));
      out.gradients.push_back(jet.gradient.tail(free));
      const Eigen::MatrixXd h = jet.hessian.bottomRightCorner(free, free);
      out.hessians.push_back(0.5 * (h + h.transpose()));
    }
  });
}

double LaplaceObjective::demo_term(int index, const Eigen::VectorXd& theta,
                                   Eigen::VectorXd* gradient) const {
  require(theta.size() == dimension(), ErrorCode::kContract, "theta dimension mismatch");
  const DemoJets& d = demos_.at(static_cast<std::size_t>(index));
  Eigen::VectorXd g = theta[0] * d.gradients[0];
  Eigen::MatrixXd h = theta[0] * d.hessians[0];
  for (int k = 1; k < dimension(); ++k) {
    g.noalias() += theta[k] * d.gradients[k];
    h.noalias() += theta[k] * d.hessians[k];
  }
  require(g.allFinite() && h.allFinite(), ErrorCode::kNumericalFailure,
          "non-finite Hessian for demonstration " + std::to_string(index));

  if (gradient == nullptr) {
    // Cheap path when the clamp is inactive.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> values(h, Eigen::EigenvaluesOnly);
    require(values.info() == Eigen::Success, ErrorCode::kNumericalFailure,
            "eigendecomposition failed for demonstration " + std::to_string(index));
    if (values.eigenvalues().minCoeff() > floor_) {
      Eigen::LLT<Eigen::MatrixXd> llt(h);
      if (llt.info() == Eigen::Success)
        return g.dot(llt.solve(g)) - values.eigenvalues().array().log().sum();
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  require(eig.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "eigendecomposition failed for demonstration " + std::to_string(index));
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::VectorXd clamped = lambda.cwiseMax(floor_);
  const Eigen::VectorXd b = v.transpose() * g;
  const Eigen::VectorXd c = b.cwiseQuotient(clamped);
  const double value = b.dot(c) - clamped.array().log().sum();
  if (gradient == nullptr) return value;

  // dF/dH~ in the eigenbasis, times the divided differences of the clamp.
  const int n = static_cast<int>(lambda.size());
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double dd;
      const double gap = lambda[i] - lambda[j];
      if (std::abs(gap) > 1e-12 * std::max(1.0, std::abs(lambda[i])))
        dd = (clamped[i] - clamped[j]) / gap;
      else
        dd = lambda[i] > floor_ ? 1.0 : 0.0;
      double dfdh = -c[i] * c[j];
      if (i == j) dfdh -= 1.0 / clamped[i];
      m(i, j) = dfdh * dd;
    }
  }
  const Eigen::MatrixXd m_full = v * m * v.transpose();
  const Eigen::VectorXd solved = v * c;  // H~^-1 g
  gradient->resize(dimension());
  for (int k = 0; k < dimension(); ++k)
    (*gradient)[k] = m_full.cwiseProduct(d.hessians[k]).sum() + 2.0 * solved.dot(d.gradients[k]);
  return value;
}

double LaplaceObjective::value(const Eigen::VectorXd& theta) const {
  return value(theta, nullptr);
}

double LaplaceObjective::value(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient) const {
  const int n = demo_count();
  std::vector<double> terms(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> grads(gradient ? static_cast<std::size_t>(n) : 0);
  detail::parallel_for(n, jobs_, [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    terms[idx] = demo_term(i, theta, gradient ? &grads[idx] : nullptr);
  });
  double total = 0.0;
  for (double t : terms) total += t;
  if (gradient) {
    *gradient = Eigen::VectorXd::Zero(dimension());
    for (const Eigen::VectorXd& g : grads) *gradient += g;
  }
  return total;
}

double laplace_objective(const ContinuousParams& params, std::span<const Demonstration> demos,
                         const ModelConfig& config,
                         std::shared_ptr<const ContinuousParams> yield_params,
                         int anchored_waypoints) {
  require(params.theta.size() == params.dimension(), ErrorCode::kContract,
          "theta/feature size mismatch");
  for (const Demonstration& d : demos)
    require(d.decision == params.decision, ErrorCode::kInvalidDecision,
            "demonstration decision differs from parameter decision");
  const LaplaceObjective objective(params.features, demos, config, std::move(yield_params),
                                   anchored_waypoints);
  return objective.value(params.theta);
}

TrainOptions TrainOptions::from_config(const ModelConfig& config) {
  TrainOptions o;
  o.max_iterations = config.optimizer.irl_max_iterations;
  o.objective_tolerance = config.optimizer.irl_objective_tolerance;
  o.restarts = config.optimizer.irl_restarts;
  o.theta_min = config.theta_min;
  o.hessian_floor = config.hessian_floor;
  return o;
}

namespace {

struct Descent {
  Eigen::VectorXd theta;
  double objective = 0.0;
  std::vector<Eigen::VectorXd> theta_trace;
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
};

Descent descend(const LaplaceObjective& objective, const Eigen::VectorXd& theta0,
                const TrainOptions& o) {
  const int dim = objective.dimension();
  const double lo = std::log(o.theta_min);
  const double hi = std::log(o.theta_max);
  auto project = [&](Eigen::VectorXd eta) { return eta.cwiseMax(lo).cwiseMin(hi).eval(); };

  Descent out;
  Eigen::VectorXd eta = project(theta0.array().log().matrix());
  Eigen::VectorXd grad_theta;
  Eigen::VectorXd theta = eta.array().exp().matrix();
  double f = objective.value(theta, &grad_theta);
  require(std::isfinite(f) && grad_theta.allFinite(), ErrorCode::kNumericalFailure,
          "Laplace objective is not finite at the initial theta");
  Eigen::VectorXd grad = theta.cwiseProduct(grad_theta);
  out.theta_trace.push_back(theta);
  out.objective_trace.push_back(f);

  Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(dim, dim);
  bool fresh = true;  // inv_h is the unscaled identity
  for (int iter = 0; iter < o.max_iterations; ++iter) {
    Eigen::VectorXd free = Eigen::VectorXd::Ones(dim);
    for (int k = 0; k < dim; ++k) {
      const bool at_lo = eta[k] <= lo + 1e-12 && grad[k] > 0.0;
      const bool at_hi = eta[k] >= hi - 1e-12 && grad[k] < 0.0;
      if (at_lo || at_hi) free[k] = 0.0;
    }
    const Eigen::VectorXd pg = grad.cwiseProduct(free);
    if (pg.norm() < 1e-12) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd dir = -(free.asDiagonal() * inv_h * free.asDiagonal()) * pg;
    if (dir.dot(pg) >= 0.0) {
      dir = -pg;
      inv_h.setIdentity();
      fresh = true;
    }
    if (fresh) dir *= std::min(1.0, 1.0 / dir.cwiseAbs().maxCoeff());

    double step_scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd eta_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 50; ++ls, step_scale *= 0.5) {
      eta_new = project(eta + step_scale * dir);
      const Eigen::VectorXd step = eta_new - eta;
      if (step.cwiseAbs().maxCoeff() == 0.0) break;
      f_new = objective.value(eta_new.array().exp().matrix());
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * grad.dot(step)) {
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      if (fresh) {
        out.converged = true;  // no descent along the projected gradient
        break;
      }
      inv_h.setIdentity();
      fresh = true;
      continue;
    }

    const Eigen::VectorXd theta_new = eta_new.array().exp().matrix();
    f_new = objective.value(theta_new, &grad_theta);
    const Eigen::VectorXd grad_new = theta_new.cwiseProduct(grad_theta);
    const Eigen::VectorXd s = eta_new - eta;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) inv_h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(dim, dim) - rho * s * y.transpose();
      inv_h = left * inv_h * left.transpose() + rho * s * s.transpose();
      fresh = false;
    }
    const double decrease = f - f_new;
    eta = eta_new;
    f = f_new;
    grad = grad_new;
    out.theta_trace.push_back(theta_new);
    out.objective_trace.push_back(f);
    if (decrease < o.objective_tolerance) {
      out.converged = true;
      break;
    }
  }
  out.theta = eta.array().exp().matrix();
  out.objective = f;
  return out;
}

}  // namespace

std::pair<ContinuousParams, TrainingRun> train_continuous(std::span<const Demonstration> demos,
                                                          Decision decision,
                                                          const ModelConfig& config,
                                                          const TrainOptions& options) {
  require(!demos.empty(), ErrorCode::kValidation,
          "no demonstrations for " + std::string(to_string(decision)));
  require(options.restarts >= 1 && options.max_iterations >= 1, ErrorCode::kValidation,
          "restarts and max_iterations must be positive");
  require(options.theta_min > 0.0 && options.theta_max > options.theta_min, ErrorCode::kValidation,
          "invalid theta bounds");
  std::vector<FeatureId> features = options.features ? *options.features : feature_set_for(decision);
  const bool courtesy =
      std::find(features.begin(), features.end(), FeatureId::kCourtesy) != features.end();
  require(!courtesy || options.yield_params != nullptr, ErrorCode::kDependency,
          std::string(to_string(decision)) + " requires trained Yield parameters (courtesy term)");
  for (std::size_t i = 0; i < demos.size(); ++i)
    require(demos[i].decision == decision, ErrorCode::kInvalidDecision,
            "demonstration " + std::to_string(i) + " is labelled " +
                std::string(to_string(demos[i].decision)) + ", training " +
                std::string(to_string(decision)));

  ModelConfig cfg = config;
  cfg.hessian_floor = options.hessian_floor;
  const LaplaceObjective objective(features, demos, cfg, options.yield_params,
                                   options.anchored_waypoints, options.jobs);
  const int dim = objective.dimension();

  TrainingRun run;
  run.decision = decision;
  Descent best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(r);
    run.restart_seeds.push_back(seed);
    Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(dim, 1.0 / dim);
    if (r > 0) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int k = 0; k < dim; ++k) theta0[k] *= std::exp(normal(rng));
    }
    Descent d = descend(objective, theta0, options);
    run.restart_objectives.push_back(d.objective);
    if (d.objective < best.objective) {
      run.best_restart = r;
      best = std::move(d);
    }
  }
  require(std::isfinite(best.objective), ErrorCode::kNumericalFailure,
          "Laplace objective diverged for " + std::string(to_string(decision)));
  run.theta_trace = std::move(best.theta_trace);
  run.objective_trace = std::move(best.objective_trace);
  run.converged = best.converged;
  run.iterations = best.iterations;

  ContinuousParams params{decision, std::move(features), best.theta};
  return {std::move(params), std::move(run)};
}

}  // namespace hirl
