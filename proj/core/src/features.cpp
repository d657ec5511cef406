#include "hirl/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hirl/error.hpp"

namespace hirl {

ContinuousParams ContinuousParams::for_decision(Decision decision, Eigen::VectorXd theta) {
  ContinuousParams p{decision, feature_set_for(decision), std::move(theta)};
  require(p.theta.size() == p.dimension(), ErrorCode::kContract,
          "theta has " + std::to_string(p.theta.size()) + " entries, " +
              std::string(to_string(decision)) + " needs " + std::to_string(p.dimension()));
  return p;
}

namespace {

double sq(double v) { return v * v; }

void require_same_shape(const Trajectory& a, const Trajectory& b, const char* what) {
  require(a.length() <= b.length(), ErrorCode::kContract,
          std::string(what) + ": reference trajectory shorter than evaluated trajectory");
  require(std::abs(a.dt() - b.dt()) <= 1e-9, ErrorCode::kContract,
          std::string(what) + ": dt mismatch");
}

// Speeds and their first/second derivatives with respect to coordinates.
struct SpeedChain {
  int n = 0;
  double dt = 0.0;
  Eigen::VectorXd v;
  Eigen::MatrixXd jac;                // n x 2n
  std::vector<Eigen::Matrix2d> curv;  // K_t for t < n-1
};

SpeedChain speed_chain(const Trajectory& traj) {
  SpeedChain c;
  c.n = traj.length();
  c.dt = traj.dt();
  c.v.resize(c.n);
  c.jac = Eigen::MatrixXd::Zero(c.n, 2 * c.n);
  c.curv.resize(c.n - 1);
  for (int t = 0; t + 1 < c.n; ++t) {
    const Eigen::Vector2d d = traj.point(t + 1) - traj.point(t);
    const double len = d.norm();
    c.v[t] = len / c.dt;
    if (len > 1e-12) {
      const Eigen::Vector2d u = d / len;
      c.jac.block<1, 2>(t, 2 * t) = -u.transpose() / c.dt;
      c.jac.block<1, 2>(t, 2 * t + 2) = u.transpose() / c.dt;
      c.curv[t] = (Eigen::Matrix2d::Identity() - u * u.transpose()) / (len * c.dt);
    } else {
      // Stationary step: speed is not differentiable; use the subgradient along +x.
      c.jac(t, 2 * t) = -1.0 / c.dt;
      c.jac(t, 2 * t + 2) = 1.0 / c.dt;
      c.curv[t].setZero();
    }
  }
  c.v[c.n - 1] = c.v[c.n - 2];
  c.jac.row(c.n - 1) = c.jac.row(c.n - 2);
  return c;
}

// jet += chain rule through v for a function with dF/dv = fv and d2F/dv2 = fvv.
void accumulate(const SpeedChain& c, const Eigen::VectorXd& fv, const Eigen::MatrixXd* fvv,
                FeatureJet& jet) {
  jet.gradient.noalias() += c.jac.transpose() * fv;
  if (fvv != nullptr) jet.hessian.noalias() += c.jac.transpose() * (*fvv) * c.jac;
  for (int t = 0; t + 1 < c.n; ++t) {
    double w = fv[t];
    if (t == c.n - 2) w += fv[c.n - 1];
    if (w == 0.0) continue;
    const Eigen::Matrix2d k = w * c.curv[t];
    jet.hessian.block<2, 2>(2 * t, 2 * t) += k;
    jet.hessian.block<2, 2>(2 * t + 2, 2 * t + 2) += k;
    jet.hessian.block<2, 2>(2 * t, 2 * t + 2) -= k;
    jet.hessian.block<2, 2>(2 * t + 2, 2 * t) -= k;
  }
}

FeatureJet quadratic_in_speed_jet(const Trajectory& traj, const Eigen::MatrixXd& op,
                                  const Eigen::VectorXd& offset) {
  // F = |op v - offset|^2
  const SpeedChain c = speed_chain(traj);
  FeatureJet jet(2 * c.n);
  const Eigen::VectorXd r = op * c.v - offset;
  jet.value = r.squaredNorm();
  const Eigen::VectorXd fv = 2.0 * op.transpose() * r;
  const Eigen::MatrixXd fvv = 2.0 * op.transpose() * op;
  accumulate(c, fv, &fvv, jet);
  return jet;
}

// F = |op z|^2 over the interleaved coordinates z.
FeatureJet quadratic_form_jet(const Trajectory& traj, const Eigen::MatrixXd& op) {
  FeatureJet jet(2 * traj.length());
  const Eigen::VectorXd r = op * traj.coords();
  jet.value = r.squaredNorm();
  jet.gradient.noalias() = 2.0 * op.transpose() * r;
  jet.hessian.noalias() = 2.0 * op.transpose() * op;
  return jet;
}

double kernel(const Eigen::Vector2d& d, const VehicleDims& dims) {
  return std::exp(-sq(d.x()) / sq(dims.length) - sq(d.y()) / sq(dims.width));
}

// Adds weight * kernel(p_t - q) and its derivatives w.r.t. p_t.
void add_kernel(FeatureJet& jet, int t, const Eigen::Vector2d& d, const VehicleDims& dims,
                double weight) {
  const double l2 = sq(dims.length);
  const double w2 = sq(dims.width);
  const double e = weight * kernel(d, dims);
  const double gx = -2.0 * d.x() / l2;
  const double gy = -2.0 * d.y() / w2;
  jet.value += e;
  jet.gradient[2 * t] += e * gx;
  jet.gradient[2 * t + 1] += e * gy;
  jet.hessian(2 * t, 2 * t) += e * (gx * gx - 2.0 / l2);
  jet.hessian(2 * t + 1, 2 * t + 1) += e * (gy * gy - 2.0 / w2);
  jet.hessian(2 * t, 2 * t + 1) += e * gx * gy;
  jet.hessian(2 * t + 1, 2 * t) += e * gx * gy;
}

double softplus(double x, double k) {
  const double z = k * x;
  if (z > 30.0) return x + std::log1p(std::exp(-z)) / k;
  return std::log1p(std::exp(z)) / k;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double theta_for(const ContinuousParams& p, FeatureId id) {
  for (int i = 0; i < p.dimension(); ++i)
    if (p.features[i] == id) return p.theta[i];
  return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------

double f_speed(const Trajectory& traj, double v_lim) {
  const KinematicProfile k = differentiate(traj);
  return (k.speeds.array() - v_lim).square().sum();
}

double idm_desired_gap(double v, double v_front, const IdmConfig& idm) {
  const double dynamic =
      v * idm.time_headway +
      v * (v - v_front) / (2.0 * std::sqrt(idm.max_acceleration * idm.comfortable_deceleration));
  return idm.jam_distance + std::max(0.0, dynamic);
}

double f_idm(const Trajectory& traj, const Trajectory& front, const IdmConfig& idm) {
  require_same_shape(traj, front, "f_idm");
  const KinematicProfile own = differentiate(traj);
  const KinematicProfile lead = differentiate(front.head(traj.length()));
  double sum = 0.0;
  for (int t = 0; t < traj.length(); ++t) {
    const double gap = front.x(t) - traj.x(t);
    require(gap >= 0.0, ErrorCode::kCrossingOrder,
            "front vehicle is behind the evaluated vehicle at step " + std::to_string(t));
    sum += sq(gap - idm_desired_gap(own.speeds[t], lead.speeds[t], idm));
  }
  return sum;
}

double f_acc(const Trajectory& traj) {
  return differentiate(traj).acceleration_vectors.squaredNorm();
}

double f_jerk(const Trajectory& traj) { return differentiate(traj).jerk_vectors.squaredNorm(); }

double f_dist(const Trajectory& traj, std::span<const Trajectory> others,
              const VehicleDims& dims) {
  double sum = 0.0;
  for (const Trajectory& other : others) {
    require_same_shape(traj, other, "f_dist");
    for (int t = 0; t < traj.length(); ++t) sum += kernel(traj.point(t) - other.point(t), dims);
  }
  return sum;
}

double f_goal(const Trajectory& traj, const Eigen::VectorXd& goals) {
  require(goals.size() == traj.coords().size(), ErrorCode::kContract,
          "goal sequence has " + std::to_string(goals.size() / 2) + " points, trajectory has " +
              std::to_string(traj.length()));
  return (traj.coords() - goals).squaredNorm();
}

Trajectory idm_rollout(const Scene& scene, int horizon, const ModelConfig& config) {
  const IdmConfig& idm = config.idm;
  const double v0 = idm.desired_speed_or(scene.v_lim);
  const Trajectory& hist = scene.hist_host;
  const Eigen::Vector2d start = hist.point(hist.length() - 1);
  const std::optional<Trajectory> leader = host_leader(scene, horizon, config.lane_width);
  std::optional<KinematicProfile> leader_kin;
  if (leader) leader_kin = differentiate(*leader);

  const double dt = scene.dt();
  Eigen::VectorXd coords(2 * horizon);
  double x = start.x();
  double v = std::abs(hist.terminal_velocity().x());
  for (int t = 0; t < horizon; ++t) {
    coords[2 * t] = x;
    coords[2 * t + 1] = start.y();
    double accel = idm.max_acceleration * (1.0 - std::pow(v / v0, 4));
    if (leader) {
      const double gap = std::max(0.1, leader->x(t) - x);
      const double desired = idm_desired_gap(v, leader_kin->speeds[t], idm);
      accel -= idm.max_acceleration * sq(desired / gap);
    }
    const double v_next = std::max(0.0, v + accel * dt);
    x += 0.5 * (v + v_next) * dt;
    v = v_next;
  }
  return Trajectory(std::move(coords), dt);
}

// ---------------------------------------------------------------------------

FeatureContext::FeatureContext(Decision decision, const Scene& scene, int horizon,
                               const ModelConfig& config,
                               std::shared_ptr<const ContinuousParams> yield_params)
    : decision_(decision),
      horizon_(horizon),
      scene_(std::make_shared<const Scene>(scene)),
      config_(config),
      yield_params_(std::move(yield_params)) {
  require(role_of(decision) == scene.role, ErrorCode::kInvalidDecision,
          std::string(to_string(decision)) + " does not belong to the scene role " +
              std::string(to_string(scene.role)));
  require(horizon >= Trajectory::kMinLength, ErrorCode::kDegenerateTrajectory,
          "horizon must be at least 3");
  require(scene.host_future.length() >= horizon, ErrorCode::kContract,
          "host future (" + std::to_string(scene.host_future.length()) +
              " steps) shorter than horizon " + std::to_string(horizon));

  goals_ = goal_sequence(decision, scene, horizon, config.goal_offset);
  host_path_ = scene.host_future.head(horizon);
  surround_ = surround_futures(scene, horizon);
  others_.reserve(surround_.size() + 1);
  others_.push_back(host_path_);
  for (const Trajectory& s : surround_) others_.push_back(s);
  front_ = front_vehicle_for(decision, scene, horizon, config.lane_width);

  if (yield_params_) {
    require(yield_params_->decision == Decision::kYield, ErrorCode::kDependency,
            "courtesy needs Yield weights, got " +
                std::string(to_string(yield_params_->decision)));
    for (FeatureId f : yield_params_->features) {
      require(f != FeatureId::kIdm && f != FeatureId::kCourtesy, ErrorCode::kContract,
              "host cost cannot use " + std::string(to_string(f)));
    }
    rollout_ = idm_rollout(scene, horizon, config);
  }
}

namespace {

double host_cost_on(const FeatureContext& ctx, const Trajectory& host, const Trajectory& merging,
                    bool include_merging) {
  const ContinuousParams& y = *ctx.yield_params();
  const Scene& scene = ctx.scene();
  const double s0 = ctx.config().goal_offset;
  const int n = merging.length();

  Eigen::VectorXd goals(2 * n);
  for (int t = 0; t < n; ++t) {
    goals[2 * t] = merging.x(t) - s0;
    goals[2 * t + 1] = scene.lanes.target_lane_y;
  }
  std::vector<Trajectory> others = surround_futures(scene, n);
  if (include_merging) others.push_back(merging);

  double c = 0.0;
  for (int i = 0; i < y.dimension(); ++i) {
    double f = 0.0;
    switch (y.features[i]) {
      case FeatureId::kSpeed: f = f_speed(host, scene.v_lim); break;
      case FeatureId::kAcc: f = f_acc(host); break;
      case FeatureId::kJerk: f = f_jerk(host); break;
      case FeatureId::kDist: f = f_dist(host, others, scene.host_dims); break;
      case FeatureId::kGoal: f = f_goal(host, goals); break;
      default: fail(ErrorCode::kContract, "unsupported host feature");
    }
    c += y.theta[i] * f;
  }
  return c;
}

void require_yield(const FeatureContext& ctx) {
  require(ctx.yield_params() != nullptr, ErrorCode::kDependency,
          "f_court requires trained Yield weights");
}

}  // namespace

double FeatureContext::host_cost(const Trajectory& traj) const {
  require_yield(*this);
  return host_cost_on(*this, host_path_.head(traj.length()), traj, true);
}

double FeatureContext::host_default_cost(const Trajectory& traj) const {
  require_yield(*this);
  return host_cost_on(*this, rollout_.head(traj.length()), traj, false);
}

double f_courtesy(const FeatureContext& ctx, const Trajectory& traj) {
  return std::max(ctx.host_cost(traj) - ctx.host_default_cost(traj), 0.0);
}

double f_courtesy(const Trajectory& traj, const Scene& scene,
                  std::shared_ptr<const ContinuousParams> yield_params,
                  const ModelConfig& config) {
  require(yield_params != nullptr, ErrorCode::kDependency,
          "f_court requires trained Yield weights");
  FeatureContext ctx(Decision::kMergeFront, scene, traj.length(), config, std::move(yield_params));
  return f_courtesy(ctx, traj);
}

FeatureJet courtesy_jet(const FeatureContext& ctx, const Trajectory& traj) {
  require_yield(ctx);
  const int n = traj.length();
  const ContinuousParams& y = *ctx.yield_params();
  const double theta_dist = theta_for(y, FeatureId::kDist);
  const double theta_goal = theta_for(y, FeatureId::kGoal);

  // Delta = C_H - C_H^default. Only the clearance to the merging vehicle and
  // the merging-anchored goal depend on traj; the goal part is linear in x.
  FeatureJet delta(2 * n);
  if (theta_dist != 0.0) {
    for (int t = 0; t < n; ++t)
      add_kernel(delta, t, traj.point(t) - ctx.host_path_.point(t), ctx.scene().host_dims,
                 theta_dist);
  }
  for (int t = 0; t < n; ++t)
    delta.gradient[2 * t] += 2.0 * theta_goal * (ctx.rollout_.x(t) - ctx.host_path_.x(t));
  delta.value = ctx.host_cost(traj) - ctx.host_default_cost(traj);

  const double k = ctx.config().courtesy_sharpness;
  const double s = logistic(k * delta.value);
  FeatureJet out(2 * n);
  out.value = softplus(delta.value, k);
  out.gradient = s * delta.gradient;
  out.hessian = s * delta.hessian;
  out.hessian.noalias() += (k * s * (1.0 - s)) * delta.gradient * delta.gradient.transpose();
  return out;
}

double feature_value(FeatureId feature, const FeatureContext& ctx, const Trajectory& traj) {
  const Scene& scene = ctx.scene();
  switch (feature) {
    case FeatureId::kSpeed: return f_speed(traj, scene.v_lim);
    case FeatureId::kIdm:
      return ctx.front() ? f_idm(traj, *ctx.front(), ctx.config().idm) : 0.0;
    case FeatureId::kAcc: return f_acc(traj);
    case FeatureId::kJerk: return f_jerk(traj);
    case FeatureId::kDist: return f_dist(traj, ctx.others(), scene.dims);
    case FeatureId::kGoal: return f_goal(traj, ctx.goals().head(traj.coords().size()));
    case FeatureId::kCourtesy: return f_courtesy(ctx, traj);
  }
  fail(ErrorCode::kContract, "unknown feature");
}

FeatureVector feature_vector(std::span<const FeatureId> features, const FeatureContext& ctx,
                             const Trajectory& traj) {
  FeatureVector out{{features.begin(), features.end()},
                    Eigen::VectorXd(static_cast<Eigen::Index>(features.size()))};
  for (std::size_t i = 0; i < features.size(); ++i)
    out.values[i] = feature_value(features[i], ctx, traj);
  return out;
}

FeatureJet feature_jet(FeatureId feature, const FeatureContext& ctx, const Trajectory& traj) {
  const int n = traj.length();
  const int dim = 2 * n;
  const Scene& scene = ctx.scene();
  switch (feature) {
    case FeatureId::kSpeed:
      return quadratic_in_speed_jet(traj, Eigen::MatrixXd::Identity(n, n),
                                    Eigen::VectorXd::Constant(n, scene.v_lim));
    case FeatureId::kAcc:
      return quadratic_form_jet(
          traj, interleaved(acceleration_operator(n, traj.dt()) * velocity_operator(n, traj.dt())));
    case FeatureId::kJerk:
      return quadratic_form_jet(
          traj, interleaved(jerk_operator(n, traj.dt()) * acceleration_operator(n, traj.dt()) *
                            velocity_operator(n, traj.dt())));
    case FeatureId::kIdm: {
      FeatureJet jet(dim);
      if (!ctx.front()) return jet;
      const Trajectory& front = *ctx.front();
      require_same_shape(traj, front, "f_idm");
      const IdmConfig& idm = ctx.config().idm;
      const KinematicProfile lead = differentiate(front.head(n));
      const SpeedChain c = speed_chain(traj);
      const double inv_root = 1.0 / (2.0 * std::sqrt(idm.max_acceleration *
                                                     idm.comfortable_deceleration));
      Eigen::VectorXd fv = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd fvv = Eigen::MatrixXd::Zero(n, n);
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(n, dim);
      for (int t = 0; t < n; ++t) {
        const double gap = front.x(t) - traj.x(t);
        require(gap >= 0.0, ErrorCode::kCrossingOrder,
                "front vehicle is behind the evaluated vehicle at step " + std::to_string(t));
        const double v = c.v[t];
        const double vf = lead.speeds[t];
        const double dynamic = v * idm.time_headway + v * (v - vf) * inv_root;
        const bool floored = dynamic < 0.0;
        const double r = gap - idm.jam_distance - (floored ? 0.0 : dynamic);
        const double ds = floored ? 0.0 : idm.time_headway + (2.0 * v - vf) * inv_root;
        const double dds = floored ? 0.0 : 2.0 * inv_root;
        jet.value += r * r;
        // dr/dz = -e_{2t} - ds * dv_t/dz
        rows.row(t) = -ds * c.jac.row(t);
        rows(t, 2 * t) -= 1.0;
        jet.gradient[2 * t] -= 2.0 * r;
        fv[t] = -2.0 * r * ds;
        fvv(t, t) = -2.0 * r * dds;
      }
      jet.hessian.noalias() += 2.0 * rows.transpose() * rows;
      accumulate(c, fv, &fvv, jet);
      return jet;
    }
    case FeatureId::kDist: {
      FeatureJet jet(dim);
      for (const Trajectory& other : ctx.others()) {
        require_same_shape(traj, other, "f_dist");
        for (int t = 0; t < n; ++t)
          add_kernel(jet, t, traj.point(t) - other.point(t), scene.dims, 1.0);
      }
      return jet;
    }
    case FeatureId::kGoal: {
      FeatureJet jet(dim);
      const Eigen::VectorXd r = traj.coords() - ctx.goals().head(dim);
      jet.value = r.squaredNorm();
      jet.gradient = 2.0 * r;
      jet.hessian.diagonal().setConstant(2.0);
      return jet;
    }
    case FeatureId::kCourtesy: return courtesy_jet(ctx, traj);
  }
  fail(ErrorCode::kContract, "unknown feature");
}

std::vector<FeatureJet> feature_jets(std::span<const FeatureId> features,
                                     const FeatureContext& ctx, const Trajectory& traj) {
  std::vector<FeatureJet> out;
  out.reserve(features.size());
  for (FeatureId f : features) out.push_back(feature_jet(f, ctx, traj));
  return out;
}

double cost(const ContinuousParams& params, const FeatureContext& ctx, const Trajectory& traj,
            CostMode mode) {
  require(params.theta.size() == params.dimension(), ErrorCode::kContract,
          "theta/feature size mismatch");
  double c = 0.0;
  for (int i = 0; i < params.dimension(); ++i) {
    if (params.theta[i] == 0.0) continue;
    double f = 0.0;
    if (params.features[i] == FeatureId::kCourtesy && mode == CostMode::kSmoothed) {
      f = softplus(ctx.host_cost(traj) - ctx.host_default_cost(traj),
                   ctx.config().courtesy_sharpness);
    } else {
      f = feature_value(params.features[i], ctx, traj);
    }
    c += params.theta[i] * f;
  }
  return c;
}

CostReport cost_gradient_hessian(const ContinuousParams& params, const FeatureContext& ctx,
                                 const Trajectory& traj) {
  require(params.theta.size() == params.dimension(), ErrorCode::kContract,
          "theta/feature size mismatch");
  const int dim = 2 * traj.length();
  CostReport report{0.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
  for (int i = 0; i < params.dimension(); ++i) {
    const double w = params.theta[i];
    if (w == 0.0) continue;
    const FeatureJet jet = feature_jet(params.features[i], ctx, traj);
    report.cost += w * jet.value;
    report.gradient.noalias() += w * jet.gradient;
    report.hessian.noalias() += w * jet.hessian;
  }
  require(std::isfinite(report.cost) && report.gradient.allFinite() && report.hessian.allFinite(),
          ErrorCode::kNumericalFailure, "non-finite cost derivatives");
  return report;
}

}  // namespace hirl
