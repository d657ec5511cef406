#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/evaluation.hpp"
#include "hirl/predictor.hpp"
#include "hirl/scenario.hpp"

namespace hirl {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

enum class NoiseModel {
  kIid,      // independent Gaussian per free coordinate
  kLaplace,  // N(0, H^-1) of the ground-truth cost at the most-likely trajectory
};

std::string_view to_string(NoiseModel model);
NoiseModel noise_model_from_string(std::string_view text);

struct GeneratorConfig {
  std::uint64_t seed = 1;
  int train_scenes = 80;
  int test_scenes = 54;
  /// Only this role when set; otherwise scenes alternate merging / lane-keeping.
  std::optional<Role> role;
  double noise_std = 0.1;  // per-coordinate RMS, metres
  NoiseModel noise_model = NoiseModel::kLaplace;

  /// Ground-truth weights in feature_set_for order, and raw-feature psi per role.
  std::map<Decision, Eigen::VectorXd> theta;
  std::map<Role, Eigen::Vector2d> psi;

  double v_lim = 25.0;
  Range host_speed{18.0, 24.0};
  Range relative_speed{-2.0, 2.0};      // predicted minus host, merging pair
  Range relative_position{-12.0, 12.0};  // merging vehicle x minus lane-keeper x
  Range leader_gap{28.0, 45.0};
  Range follower_gap{25.0, 40.0};
  Range neighbour_speed{-1.0, 1.0};  // leader/follower speed minus lane-keeper speed
  Range host_plan_accel{-0.5, 0.5};  // constant acceleration added to the host plan
  Range merge_duration{2.5, 4.0};    // host lateral manoeuvre in lane-keeping scenes, s
  /// Initial longitudinal gap below which front-style patterns are aggressive.
  double aggressive_gap = 15.0;
  int max_retries = 20;

  static GeneratorConfig defaults();
  bool operator==(const GeneratorConfig&) const = default;
};

/// Ground-truth parameters as a ParameterSet (psi acts on raw features).
ParameterSet ground_truth_params(const GeneratorConfig& gen);

/// A randomized scene with histories of config.history_steps samples and a
/// host plan of config.train_horizon samples (at least the prediction horizon).
Scene random_scene(Role role, std::mt19937_64& rng, const GeneratorConfig& gen,
                   const ModelConfig& config);

/// Decision probabilities of the ground-truth model for a scene.
std::array<double, 2> true_decision_probabilities(const Scene& scene, const GeneratorConfig& gen,
                                                  const ModelConfig& config);

struct SyntheticScene {
  TestCase labelled;  // id, demonstration, pattern labels
  std::array<double, 2> true_probs{};
  double initial_gap = 0.0;
};

struct SyntheticData {
  std::vector<SyntheticScene> train;
  std::vector<SyntheticScene> test;
};

/// Pure function of (gen, config).
SyntheticData generate_synthetic(const GeneratorConfig& gen, const ModelConfig& config);

/// Adds demonstration noise to a most-likely trajectory (anchors untouched).
Trajectory add_demo_noise(const Trajectory& most_likely, const ContinuousParams& theta,
                          const FeatureContext& ctx, const GeneratorConfig& gen,
                          std::mt19937_64& rng);

}  // namespace hirl
