#include "hirl/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hirl/error.hpp"
#include "hirl/linalg.hpp"

namespace hirl {

std::string_view to_string(NoiseModel model) {
  return model == NoiseModel::kIid ? "iid" : "laplace";
}

NoiseModel noise_model_from_string(std::string_view text) {
  if (text == "iid") return NoiseModel::kIid;
  if (text == "laplace") return NoiseModel::kLaplace;
  fail(ErrorCode::kParse, "unknown noise model '" + std::string(text) + "'");
}

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig g;
  auto vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
  };
  //                                 f_v   f_IDM f_acc f_jerk f_dist f_court f_g
  g.theta[Decision::kYield] = vec({0.05, 0.5, 0.05, 1.0, 0.05});
  g.theta[Decision::kPass] = vec({0.05, 0.02, 0.5, 0.05, 1.0, 0.05});
  g.theta[Decision::kMergeBack] = vec({0.05, 0.5, 0.05, 1.0, 0.05});
  g.theta[Decision::kMergeFront] = vec({0.05, 0.02, 0.5, 0.05, 1.0, 0.2, 0.05});
  g.psi[Role::kMerging] = Eigen::Vector2d(0.05, 0.005);
  g.psi[Role::kLaneKeeping] = Eigen::Vector2d(0.05, 0.005);
  return g;
}

ParameterSet ground_truth_params(const GeneratorConfig& gen) {
  ParameterSet p;
  for (const auto& [d, theta] : gen.theta)
    p.continuous.emplace(d, ContinuousParams::for_decision(d, theta));
  for (const auto& [role, psi] : gen.psi) {
    DiscreteParams dp;
    dp.role = role;
    dp.psi = psi;
    p.discrete.emplace(role, dp);
  }
  return p;
}

namespace {

double draw(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

// History of `n` samples ending at `now` with constant velocity.
Trajectory history_ending_at(const Eigen::Vector2d& now, const Eigen::Vector2d& v, int n,
                             double dt) {
  const Eigen::Vector2d start = now - (n - 1) * dt * v;
  Trajectory h = Trajectory::constant_velocity(start, v, n, dt);
  h.mutable_coords().tail<2>() = now;  // exact current position
  return h;
}

}  // namespace

Scene random_scene(Role role, std::mt19937_64& rng, const GeneratorConfig& gen,
                   const ModelConfig& config) {
  const double dt = config.dt;
  const int hist = config.history_steps;
  const int plan =
      std::max({config.train_horizon, config.predict_horizon, config.decision_horizon});
  const double w = config.lane_width;

  const double v_keep = draw(rng, gen.host_speed);
  const double v_merge = std::max(1.0, v_keep + draw(rng, gen.relative_speed));
  const double x_merge = draw(rng, gen.relative_position);
  const double leader_gap = draw(rng, gen.leader_gap);
  const double leader_v = std::max(1.0, v_keep + draw(rng, gen.neighbour_speed));
  const double follower_gap = draw(rng, gen.follower_gap);
  const double follower_v = std::max(1.0, v_keep + draw(rng, gen.neighbour_speed));
  const double plan_accel = draw(rng, gen.host_plan_accel);
  const double merge_time = draw(rng, gen.merge_duration);

  const Eigen::Vector2d keeper_now(0.0, 0.0);
  const Eigen::Vector2d merger_now(x_merge, -w);
  const Trajectory keeper_hist = history_ending_at(keeper_now, {v_keep, 0.0}, hist, dt);
  const Trajectory merger_hist = history_ending_at(merger_now, {v_merge, 0.0}, hist, dt);

  Scene s;
  s.role = role;
  s.v_lim = gen.v_lim;
  s.dims = config.dims;
  s.host_dims = config.dims;
  s.hist_surround.push_back(history_ending_at({leader_gap, 0.0}, {leader_v, 0.0}, hist, dt));
  s.hist_surround.push_back(history_ending_at({-follower_gap, 0.0}, {follower_v, 0.0}, hist, dt));

  if (role == Role::kMerging) {
    s.hist_predicted = merger_hist;
    s.hist_host = keeper_hist;
    s.lanes.current_lane_y = -w;
    s.lanes.target_lane_y = 0.0;
    // Lane-keeper plan: its default car following, biased by a constant acceleration.
    s.host_future = keeper_hist;  // placeholder so the rollout sees a valid scene
    Trajectory rollout = idm_rollout(s, plan, config);
    Eigen::VectorXd& c = rollout.mutable_coords();
    for (int t = 0; t < plan; ++t) c[2 * t] += 0.5 * plan_accel * (t * dt) * (t * dt);
    s.host_future = std::move(rollout);
  } else {
    s.hist_predicted = keeper_hist;
    s.hist_host = merger_hist;
    s.lanes.current_lane_y = 0.0;
    s.lanes.target_lane_y = 0.0;
    // Merging-vehicle plan: smooth lane change into the main lane.
    Eigen::VectorXd c(2 * plan);
    for (int t = 0; t < plan; ++t) {
      const double time = t * dt;
      const double blend =
          time < merge_time ? 0.5 * (1.0 - std::cos(std::numbers::pi * time / merge_time)) : 1.0;
      c[2 * t] = x_merge + v_merge * time + 0.5 * plan_accel * time * time;
      c[2 * t + 1] = -w + w * blend;
    }
    s.host_future = Trajectory(std::move(c), dt);
  }
  validate(s);
  return s;
}

std::array<double, 2> true_decision_probabilities(const Scene& scene, const GeneratorConfig& gen,
                                                  const ModelConfig& config) {
  const ParameterSet truth = ground_truth_params(gen);
  const std::shared_ptr<const ContinuousParams> yield = yield_params_of(truth.continuous);
  const std::array<Decision, 2> candidates = decisions_for(scene.role);
  std::array<Eigen::Vector2d, 2> f;
  for (int i = 0; i < 2; ++i) {
    const Decision d = candidates[static_cast<std::size_t>(i)];
    f[static_cast<std::size_t>(i)] =
        decision_feature(d, scene, truth.continuous.at(d), config, yield).vector();
  }
  const std::vector<double> p = decision_probabilities(gen.psi.at(scene.role), f);
  return {p[0], p[1]};
}

Trajectory add_demo_noise(const Trajectory& most_likely, const ContinuousParams& theta,
                          const FeatureContext& ctx, const GeneratorConfig& gen,
                          std::mt19937_64& rng) {
  Trajectory out = most_likely;
  if (gen.noise_std == 0.0) return out;
  const int anchors = SolverOptions{}.anchored_waypoints;
  const int free = 2 * (most_likely.length() - anchors);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(free);
  for (int i = 0; i < free; ++i) z[i] = normal(rng);

  Eigen::VectorXd eps;
  if (gen.noise_model == NoiseModel::kIid) {
    eps = gen.noise_std * z;
  } else {
    const CostReport r = cost_gradient_hessian(theta, ctx, most_likely);
    ClampedSpectrum spec = clamp_spectrum(r.hessian.bottomRightCorner(free, free),
                                          ctx.config().hessian_floor);
    const double floor =
        std::max(ctx.config().hessian_floor, 1e-8 * std::max(0.0, spec.raw.maxCoeff()));
    spec.clamped = spec.raw.cwiseMax(floor);
    const Eigen::VectorXd inv_sqrt = spec.clamped.cwiseSqrt().cwiseInverse();
    const double rms = std::sqrt(inv_sqrt.squaredNorm() / free);
    eps = (gen.noise_std / rms) * (spec.vectors * inv_sqrt.cwiseProduct(z));
  }
  out.mutable_coords().tail(free) += eps;
  return out;
}

namespace {

std::vector<PatternLabel> pattern_labels(Role role, Decision truth, double gap, double threshold) {
  std::vector<PatternLabel> labels;
  for (Decision d : decisions_for(role)) {
    if (d == truth)
      labels.push_back(PatternLabel::kGroundTruth);
    else if (gap < threshold && is_front_style(d))
      labels.push_back(PatternLabel::kAggressive);
    else if (gap < threshold && is_front_style(truth))
      labels.push_back(PatternLabel::kDangerous);
    else
      labels.push_back(PatternLabel::kNeutral);
  }
  return labels;
}

SyntheticScene make_scene(Role role, const std::string& id, std::mt19937_64& rng,
                          const GeneratorConfig& gen, const ModelConfig& config,
                          const ParameterSet& truth) {
  const std::shared_ptr<const ContinuousParams> yield = yield_params_of(truth.continuous);
  for (int attempt = 0; attempt <= gen.max_retries; ++attempt) {
    try {
      const Scene scene = random_scene(role, rng, gen, config);
      const std::array<double, 2> probs = true_decision_probabilities(scene, gen, config);
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const std::array<Decision, 2> candidates = decisions_for(role);
      const Decision decision = u < probs[0] ? candidates[0] : candidates[1];

      const ContinuousParams& theta = truth.continuous.at(decision);
      const FeatureContext ctx(decision, scene, config.train_horizon, config, yield);
      const SolverResult ml = solve_most_likely(theta, ctx, SolverOptions::from_config(config));
      Trajectory future = add_demo_noise(ml.trajectory, theta, ctx, gen, rng);

      SyntheticScene out;
      out.true_probs = probs;
      out.initial_gap = std::abs(scene.current_position().x() -
                                 scene.hist_host.x(scene.hist_host.length() - 1));
      out.labelled.id = id;
      out.labelled.labels = pattern_labels(role, decision, out.initial_gap, gen.aggressive_gap);
      out.labelled.w_c.assign(2, 1.0);
      out.labelled.w_d.assign(2, 1.0);
      out.labelled.truth = Demonstration{std::move(future), decision, scene};
      return out;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kValidation || e.code() == ErrorCode::kContract) throw;
    }
  }
  fail(ErrorCode::kNumericalFailure,
       "scene " + id + ": optimizer failed on " + std::to_string(gen.max_retries + 1) +
           " randomized draws");
}

}  // namespace

SyntheticData generate_synthetic(const GeneratorConfig& gen, const ModelConfig& config) {
  require(gen.train_scenes > 0 && gen.test_scenes > 0, ErrorCode::kValidation,
          "scene counts must be positive");
  require(gen.noise_std >= 0.0, ErrorCode::kValidation, "noise_std must be non-negative");
  require(gen.max_retries >= 0, ErrorCode::kValidation, "max_retries must be non-negative");
  for (Decision d : {Decision::kMergeFront, Decision::kMergeBack, Decision::kYield,
                     Decision::kPass}) {
    const bool used = !gen.role || role_of(d) == *gen.role;
    if (!used) continue;
    require(gen.theta.count(d) > 0, ErrorCode::kValidation,
            "generator lacks ground-truth theta for " + std::string(to_string(d)));
    require(gen.psi.count(role_of(d)) > 0, ErrorCode::kValidation,
            "generator lacks ground-truth psi for " + std::string(to_string(role_of(d))));
  }
  const bool merging_used = !gen.role || *gen.role == Role::kMerging;
  require(!merging_used || gen.theta.count(Decision::kYield) > 0, ErrorCode::kValidation,
          "merging scenes need Yield weights for the courtesy term");
  validate(config);

  const ParameterSet truth = ground_truth_params(gen);
  std::mt19937_64 rng(gen.seed);
  SyntheticData data;
  auto role_for = [&gen](int i) {
    if (gen.role) return *gen.role;
    return i % 2 == 0 ? Role::kMerging : Role::kLaneKeeping;
  };
  char id[32];
  for (int i = 0; i < gen.train_scenes; ++i) {
    std::snprintf(id, sizeof id, "train-%04d", i);
    data.train.push_back(make_scene(role_for(i), id, rng, gen, config, truth));
  }
  for (int i = 0; i < gen.test_scenes; ++i) {
    std::snprintf(id, sizeof id, "test-%04d", i);
    data.test.push_back(make_scene(role_for(i), id, rng, gen, config, truth));
  }
  return data;
}

}  // namespace hirl
