#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hirl/config.hpp"
#include "hirl/predictor.hpp"
#include "hirl/scenario.hpp"
#include "hirl/trajectory.hpp"

namespace hirl {

enum class PatternLabel { kGroundTruth, kAggressive, kDangerous, kNeutral };

std::string_view to_string(PatternLabel label);
PatternLabel pattern_label_from_string(std::string_view text);

/// Predicted probabilities over the M motion patterns of one test example.
struct LabeledPrediction {
  std::vector<double> probs;
  std::vector<PatternLabel> labels;
  std::vector<double> w_c;  // empty means 1.0 everywhere
  std::vector<double> w_d;
};

struct BrierScores {
  double ground_truth = 0.0;      // G
  double conservatism = 0.0;      // C
  double non_defensiveness = 0.0;  // D
  double total = 0.0;             // Bc = G + C + D
  bool ground_truth_empty = false;
  bool conservatism_empty = false;
  bool non_defensiveness_empty = false;
};

/// Throws kValidation for probabilities outside [0, 1], rows not summing to
/// one, or examples without exactly one ground-truth pattern.
BrierScores brier_scores(std::span<const LabeledPrediction> preds);

/// Mean pointwise Euclidean distance of equal-length trajectories.
double med(const Trajectory& a, const Trajectory& b);

struct MedStats {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double std = 0.0;  // population
};

MedStats med_stats(std::span<const double> values);

/// A held-out scene with its ground-truth future and pattern labels, one per
/// decision of the role in decisions_for order.
struct TestCase {
  std::string id;
  Demonstration truth;
  std::vector<PatternLabel> labels;
  std::vector<double> w_c;
  std::vector<double> w_d;
};

struct EvaluationReport {
  MedStats med;
  BrierScores brier;
  int n_scenes = 0;
  int n_failures = 0;
  std::vector<std::string> failures;  // "<id>: <message>"
};

EvaluationReport evaluate_suite(std::span<const TestCase> tests, const ParameterSet& params,
                                const ModelConfig& config, const PredictOptions& options);

/// {med: {mean, max, min, std}, brier: {G, C, D, Bc}, n_scenes, n_failures}
std::string report_to_json(const EvaluationReport& report);

}  // namespace hirl
