#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/evaluation.hpp"
#include "hirl/generator.hpp"
#include "hirl/predictor.hpp"
#include "hirl/scenario.hpp"

namespace hirl {

// ---------------------------------------------------------------------------
// Scene files.
//
// Tracks:  scene_id,vehicle_role,t,x,y   (role: predicted | host | surround_<k>)
// Sidecar: <stem>.scenes.csv with one row per scene:
//   scene_id,role,decision,v_lim,length,width,host_length,host_width,
//   current_lane_y,target_lane_y,labels,w_c,w_d
// where labels/w_c/w_d are ';'-separated per decision of the role and may be
// empty, as may decision.
//
// The first history_steps samples of the predicted track are its history;
// the current time is the last of them. Other tracks are sampled at the same
// instants and the host track is continued as the host plan. Futures start
// at the current sample.
//
// NGSIM (US-101 / I-80 trajectory tables) maps onto the canonical format as
//   scene_id <- an annotated interaction id, vehicle_role <- annotation,
//   t <- Global_Time / 1000 (ms to s), x <- Local_Y * 0.3048, y <- -(Local_X - lane
//   centre) * 0.3048 (feet to metres, left positive), length/width <- v_Length,
//   v_Width * 0.3048. No NGSIM data ships with this repository.

inline constexpr const char* kTrackHeader = "scene_id,vehicle_role,t,x,y";
inline constexpr const char* kSidecarHeader =
    "scene_id,role,decision,v_lim,length,width,host_length,host_width,current_lane_y,"
    "target_lane_y,labels,w_c,w_d";

struct SceneRecord {
  std::string id;
  Scene scene;
  std::optional<Trajectory> future;  // predicted vehicle
  std::optional<Decision> decision;
  std::vector<PatternLabel> labels;
  std::vector<double> w_c;
  std::vector<double> w_d;
};

std::filesystem::path sidecar_path(const std::filesystem::path& tracks);

/// Throws kIo when unreadable, kParse with a row number on schema errors and
/// kData on non-uniform timestamps or missing samples.
std::vector<SceneRecord> read_scene_records(const std::filesystem::path& tracks,
                                            const ModelConfig& config);
void write_scene_records(const std::filesystem::path& tracks, std::span<const SceneRecord> records);

SceneRecord to_record(const TestCase& test);
SceneRecord to_record(const SyntheticScene& scene);
/// Throws kData when the record lacks a future or decision.
Demonstration to_demonstration(const SceneRecord& record);
/// Requires labels as well.
TestCase to_test_case(const SceneRecord& record);

std::vector<Demonstration> load_demonstrations(const std::filesystem::path& tracks,
                                               const ModelConfig& config);
std::vector<TestCase> load_test_cases(const std::filesystem::path& tracks,
                                      const ModelConfig& config);

std::map<Decision, std::vector<Demonstration>> partition_by_decision(
    std::span<const Demonstration> demos);

/// Host rows of a tracks file as plans starting at sample 0, keyed by scene id.
std::map<std::string, Trajectory> read_host_plans(const std::filesystem::path& tracks,
                                                  const ModelConfig& config);

/// Seeded shuffle then split; the first part has round(fraction * n) records.
std::pair<std::vector<SceneRecord>, std::vector<SceneRecord>> split_records(
    std::vector<SceneRecord> records, double fraction, std::uint64_t seed);

/// Uniform-in-time linear resampling of a track starting at t0.
Trajectory resample(std::span<const double> times, std::span<const Eigen::Vector2d> points,
                    double dt);

// ---------------------------------------------------------------------------
// Parameter files.

inline constexpr int kParamFormatVersion = 1;

std::string params_to_json(const ParameterSet& params, const ModelConfig& config);
/// Throws kParse on malformed text and kConfigMismatch when the stored
/// fingerprint differs from `config`.
ParameterSet params_from_json(const std::string& text, const ModelConfig& config);
void save_params(const std::filesystem::path& path, const ParameterSet& params,
                 const ModelConfig& config);
ParameterSet load_params(const std::filesystem::path& path, const ModelConfig& config);

// ---------------------------------------------------------------------------
// Generator configuration and prediction output.

std::string to_json_string(const GeneratorConfig& gen);
/// Missing keys take GeneratorConfig::defaults(); unknown keys are rejected.
GeneratorConfig generator_config_from_json_string(const std::string& text);

std::string prediction_to_json(const PredictionMixture& mixture);
/// decision,kind,sample,weight,t,x,y with kind "most_likely" or "sample".
std::string prediction_to_csv(const PredictionMixture& mixture);

// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace hirl
