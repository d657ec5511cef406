#pragma once

#include <optional>
#include <string>

namespace hirl {

struct IdmConfig {
  /// Desired speed; unset means "use the scene speed limit".
  std::optional<double> desired_speed;
  double time_headway = 1.5;
  double max_acceleration = 1.0;
  double comfortable_deceleration = 1.5;
  double jam_distance = 2.0;

  double desired_speed_or(double v_lim) const { return desired_speed.value_or(v_lim); }
  bool operator==(const IdmConfig&) const = default;
};

struct VehicleDims {
  double length = 4.5;
  double width = 1.8;
  bool operator==(const VehicleDims&) const = default;
};

struct OptimizerConfig {
  // most-likely trajectory (Gauss-Newton)
  int mpc_max_iterations = 200;
  double mpc_step_tolerance = 1e-6;
  // continuous IRL
  int irl_max_iterations = 500;
  double irl_objective_tolerance = 1e-8;
  int irl_restarts = 3;
  // discrete IRL
  int discrete_max_iterations = 2000;
  double discrete_step = 0.05;
  double discrete_gradient_tolerance = 1e-6;
  bool operator==(const OptimizerConfig&) const = default;
};

/// Single source of numeric defaults shared by training, prediction and the CLI.
struct ModelConfig {
  double dt = 0.1;
  int history_steps = 50;
  int train_horizon = 50;
  int predict_horizon = 30;
  /// Horizon over which discrete decision features are computed, both in
  /// training and at inference.
  int decision_horizon = 30;
  double goal_offset = 10.0;  // s_0
  double lane_width = 3.7;
  double courtesy_sharpness = 20.0;
  double theta_min = 1e-6;
  double hessian_floor = 1e-6;
  int samples_per_decision = 100;
  double sample_sigma = 0.5;
  IdmConfig idm;
  VehicleDims dims;
  OptimizerConfig optimizer;
  bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& config);

/// JSON text round-trip; unknown keys are rejected, missing keys take defaults.
std::string to_json_string(const ModelConfig& config);
ModelConfig model_config_from_json_string(const std::string& text);

}  // namespace hirl
