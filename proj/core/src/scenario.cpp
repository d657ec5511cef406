#include "hirl/scenario.hpp"

#include <cmath>
#include <limits>

#include "hirl/error.hpp"

namespace hirl {

std::string_view to_string(Role role) {
  return role == Role::kMerging ? "merging" : "lane-keeping";
}

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::kMergeFront: return "MergeFront";
    case Decision::kMergeBack: return "MergeBack";
    case Decision::kYield: return "Yield";
    case Decision::kPass: return "Pass";
  }
  return "?";
}

std::string_view to_string(FeatureId feature) {
  switch (feature) {
    case FeatureId::kSpeed: return "f_v";
    case FeatureId::kIdm: return "f_IDM";
    case FeatureId::kAcc: return "f_acc";
    case FeatureId::kJerk: return "f_jerk";
    case FeatureId::kDist: return "f_dist";
    case FeatureId::kGoal: return "f_g";
    case FeatureId::kCourtesy: return "f_court";
  }
  return "?";
}

Role role_from_string(std::string_view text) {
  if (text == "merging") return Role::kMerging;
  if (text == "lane-keeping") return Role::kLaneKeeping;
  fail(ErrorCode::kParse, "unknown role '" + std::string(text) + "'");
}

Decision decision_from_string(std::string_view text) {
  for (Decision d : {Decision::kMergeFront, Decision::kMergeBack, Decision::kYield,
                     Decision::kPass}) {
    if (text == to_string(d)) return d;
  }
  fail(ErrorCode::kParse, "unknown decision '" + std::string(text) + "'");
}

FeatureId feature_from_string(std::string_view text) {
  for (FeatureId f : {FeatureId::kSpeed, FeatureId::kIdm, FeatureId::kAcc, FeatureId::kJerk,
                      FeatureId::kDist, FeatureId::kGoal, FeatureId::kCourtesy}) {
    if (text == to_string(f)) return f;
  }
  fail(ErrorCode::kParse, "unknown feature '" + std::string(text) + "'");
}

Role role_of(Decision decision) {
  return (decision == Decision::kMergeFront || decision == Decision::kMergeBack)
             ? Role::kMerging
             : Role::kLaneKeeping;
}

std::array<Decision, 2> decisions_for(Role role) {
  if (role == Role::kMerging) return {Decision::kMergeFront, Decision::kMergeBack};
  return {Decision::kYield, Decision::kPass};
}

bool is_front_style(Decision decision) {
  return decision == Decision::kMergeFront || decision == Decision::kPass;
}

std::vector<FeatureId> feature_set_for(Role role, Decision decision) {
  require(role_of(decision) == role, ErrorCode::kInvalidDecision,
          std::string(to_string(decision)) + " is not a decision of the " +
              std::string(to_string(role)) + " role");
  using F = FeatureId;
  switch (decision) {
    case Decision::kYield: return {F::kSpeed, F::kAcc, F::kJerk, F::kDist, F::kGoal};
    case Decision::kPass: return {F::kSpeed, F::kIdm, F::kAcc, F::kJerk, F::kDist, F::kGoal};
    case Decision::kMergeBack: return {F::kSpeed, F::kAcc, F::kJerk, F::kDist, F::kGoal};
    case Decision::kMergeFront:
      return {F::kSpeed, F::kIdm, F::kAcc, F::kJerk, F::kDist, F::kCourtesy, F::kGoal};
  }
  fail(ErrorCode::kInvalidDecision, "unhandled decision");
}

std::vector<FeatureId> feature_set_for(Decision decision) {
  return feature_set_for(role_of(decision), decision);
}

Eigen::Vector2d Scene::current_position() const {
  return hist_predicted.point(hist_predicted.length() - 1);
}

Eigen::Vector2d Scene::current_velocity() const { return hist_predicted.terminal_velocity(); }

double Scene::goal_lane_y() const {
  return role == Role::kLaneKeeping ? lanes.current_lane_y : lanes.target_lane_y;
}

void validate(const Scene& scene) {
  validate(scene.hist_predicted);
  validate(scene.hist_host);
  validate(scene.host_future);
  const double dt = scene.dt();
  const int hist_len = scene.hist_predicted.length();
  auto same_dt = [dt](const Trajectory& t) { return std::abs(t.dt() - dt) <= 1e-9; };
  require(same_dt(scene.hist_host) && same_dt(scene.host_future), ErrorCode::kContract,
          "scene trajectories must share dt");
  require(scene.hist_host.length() == hist_len, ErrorCode::kContract,
          "historical trajectories must share length");
  for (const Trajectory& s : scene.hist_surround) {
    validate(s);
    require(same_dt(s), ErrorCode::kContract, "scene trajectories must share dt");
    require(s.length() == hist_len, ErrorCode::kContract,
            "historical trajectories must share length");
  }
  require(scene.v_lim > 0.0, ErrorCode::kContract, "v_lim must be positive");
  require(scene.dims.length > 0.0 && scene.dims.width > 0.0 && scene.host_dims.length > 0.0 &&
              scene.host_dims.width > 0.0,
          ErrorCode::kContract, "vehicle dimensions must be positive");
}

void validate(const Demonstration& demo) {
  validate(demo.scene);
  validate(demo.future);
  require(role_of(demo.decision) == demo.scene.role, ErrorCode::kInvalidDecision,
          "decision " + std::string(to_string(demo.decision)) + " inconsistent with scene role");
  require(std::abs(demo.future.dt() - demo.scene.dt()) <= 1e-9, ErrorCode::kContract,
          "demonstration future dt differs from scene dt");
  require(demo.scene.host_future.length() >= demo.future.length(), ErrorCode::kContract,
          "host future shorter than demonstration future");
}

Eigen::Vector2d goal_point_for(Role role, Decision decision, const Scene& scene, int t,
                               double goal_offset) {
  require(role_of(decision) == role, ErrorCode::kInvalidDecision,
          "decision/role mismatch in goal_point_for");
  require(t >= 0 && t < scene.host_future.length(), ErrorCode::kOutOfRange,
          "goal step " + std::to_string(t) + " beyond host future of length " +
              std::to_string(scene.host_future.length()));
  const double sign = is_front_style(decision) ? 1.0 : -1.0;
  const double lateral = role == Role::kLaneKeeping ? scene.lanes.current_lane_y
                                                    : scene.lanes.target_lane_y;
  return {scene.host_future.x(t) + sign * goal_offset, lateral};
}

Eigen::VectorXd goal_sequence(Decision decision, const Scene& scene, int n, double goal_offset) {
  Eigen::VectorXd goals(2 * n);
  for (int t = 0; t < n; ++t)
    goals.segment<2>(2 * t) = goal_point_for(scene.role, decision, scene, t, goal_offset);
  return goals;
}

Trajectory extrapolate(const Trajectory& history, int horizon) {
  return Trajectory::constant_velocity(history.point(history.length() - 1),
                                       history.terminal_velocity(), horizon, history.dt());
}

std::vector<Trajectory> surround_futures(const Scene& scene, int horizon) {
  std::vector<Trajectory> out;
  out.reserve(scene.hist_surround.size());
  for (const Trajectory& h : scene.hist_surround) out.push_back(extrapolate(h, horizon));
  return out;
}

namespace {

std::optional<Trajectory> leader_in_lane(const Scene& scene, double lane_y, double reference_x,
                                         int horizon, double lane_width) {
  int best = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scene.hist_surround.size(); ++k) {
    const Trajectory& h = scene.hist_surround[k];
    const Eigen::Vector2d p = h.point(h.length() - 1);
    if (std::abs(p.y() - lane_y) > 0.5 * lane_width) continue;
    const double gap = p.x() - reference_x;
    if (gap > 0.0 && gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(k);
    }
  }
  if (best < 0) return std::nullopt;
  return extrapolate(scene.hist_surround[best], horizon);
}

}  // namespace

std::optional<Trajectory> host_leader(const Scene& scene, int horizon, double lane_width) {
  const Trajectory& h = scene.hist_host;
  return leader_in_lane(scene, scene.lanes.target_lane_y, h.x(h.length() - 1), horizon,
                        lane_width);
}

std::optional<Trajectory> front_vehicle_for(Decision decision, const Scene& scene, int horizon,
                                            double lane_width) {
  switch (decision) {
    case Decision::kPass:
      return leader_in_lane(scene, scene.lanes.current_lane_y, scene.current_position().x(),
                            horizon, lane_width);
    case Decision::kMergeFront:
      return host_leader(scene, horizon, lane_width);
    default:
      return std::nullopt;
  }
}

}  // namespace hirl
