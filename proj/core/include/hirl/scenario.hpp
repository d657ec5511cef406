#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/frenet.hpp"
#include "hirl/trajectory.hpp"

namespace hirl {

enum class Role { kMerging, kLaneKeeping };

enum class Decision { kMergeFront, kMergeBack, kYield, kPass };

enum class FeatureId { kSpeed, kIdm, kAcc, kJerk, kDist, kGoal, kCourtesy };

std::string_view to_string(Role role);
std::string_view to_string(Decision decision);
std::string_view to_string(FeatureId feature);
Role role_from_string(std::string_view text);
Decision decision_from_string(std::string_view text);
FeatureId feature_from_string(std::string_view text);

Role role_of(Decision decision);

/// The two decisions available to a role, in a fixed order.
std::array<Decision, 2> decisions_for(Role role);

/// MergeFront and Pass: the predicted vehicle ends up ahead of the host.
bool is_front_style(Decision decision);

/// Feature list for a decision; theta indices bind to this order.
///   Yield      [f_v, f_acc, f_jerk, f_dist, f_g]
///   Pass       [f_v, f_IDM, f_acc, f_jerk, f_dist, f_g]
///   MergeBack  [f_v, f_acc, f_jerk, f_dist, f_g]
///   MergeFront [f_v, f_IDM, f_acc, f_jerk, f_dist, f_court, f_g]
std::vector<FeatureId> feature_set_for(Role role, Decision decision);
std::vector<FeatureId> feature_set_for(Decision decision);

struct LaneGeometry {
  /// Lateral offsets of lane centers in the scene's Frenet frame.
  double current_lane_y = 0.0;
  double target_lane_y = 0.0;
  std::optional<Centerline> reference;
};

/// Conditioning context of a prediction: histories plus the host's plan.
struct Scene {
  Role role = Role::kMerging;
  Trajectory hist_predicted;
  Trajectory hist_host;
  std::vector<Trajectory> hist_surround;
  Trajectory host_future;
  LaneGeometry lanes;
  double v_lim = 25.0;
  VehicleDims dims;
  VehicleDims host_dims;

  double dt() const noexcept { return hist_predicted.dt(); }
  Eigen::Vector2d current_position() const;
  Eigen::Vector2d current_velocity() const;
  /// Lateral coordinate of the goal lane for this role.
  double goal_lane_y() const;
};

struct Demonstration {
  Trajectory future;
  Decision decision = Decision::kMergeBack;
  Scene scene;
};

void validate(const Scene& scene);
void validate(const Demonstration& demo);

/// Short-term goal at step t: lateral = goal lane center, longitudinal = host
/// longitudinal position at t minus s_0 (Yield, MergeBack) or plus s_0 (Pass,
/// MergeFront).
Eigen::Vector2d goal_point_for(Role role, Decision decision, const Scene& scene, int t,
                               double goal_offset);

/// Goals for steps 0..n-1 as flat coordinates.
Eigen::VectorXd goal_sequence(Decision decision, const Scene& scene, int n, double goal_offset);

/// Constant-velocity extrapolation of a history, starting at its last sample.
Trajectory extrapolate(const Trajectory& history, int horizon);

/// Surrounding vehicles extrapolated over `horizon` steps.
std::vector<Trajectory> surround_futures(const Scene& scene, int horizon);

/// Leader used by f_IDM, already extrapolated over `horizon`: for Pass the
/// predicted vehicle's in-lane leader, for MergeFront the host's leader on the
/// target lane. Smallest positive longitudinal gap wins; nullopt when none.
std::optional<Trajectory> front_vehicle_for(Decision decision, const Scene& scene, int horizon,
                                            double lane_width);

/// The host's own leader in its lane (used by the host's default IDM rollout).
std::optional<Trajectory> host_leader(const Scene& scene, int horizon, double lane_width);

}  // namespace hirl
