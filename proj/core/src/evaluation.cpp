#include "hirl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hirl/error.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace hirl {

std::string_view to_string(PatternLabel label) {
  switch (label) {
    case PatternLabel::kGroundTruth: return "ground_truth";
    case PatternLabel::kAggressive: return "aggressive";
    case PatternLabel::kDangerous: return "dangerous";
    case PatternLabel::kNeutral: return "neutral";
  }
  return "?";
}

PatternLabel pattern_label_from_string(std::string_view text) {
  for (PatternLabel l : {PatternLabel::kGroundTruth, PatternLabel::kAggressive,
                         PatternLabel::kDangerous, PatternLabel::kNeutral}) {
    if (text == to_string(l)) return l;
  }
  fail(ErrorCode::kParse, "unknown pattern label '" + std::string(text) + "'");
}

BrierScores brier_scores(std::span<const LabeledPrediction> preds) {
  double g_sum = 0.0, c_sum = 0.0, d_sum = 0.0;
  int g_n = 0, c_n = 0, d_n = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const LabeledPrediction& p = preds[i];
    const std::string where = "example " + std::to_string(i);
    const std::size_t m = p.probs.size();
    require(m > 0 && p.labels.size() == m, ErrorCode::kValidation,
            where + ": probabilities and labels differ in size");
    require((p.w_c.empty() || p.w_c.size() == m) && (p.w_d.empty() || p.w_d.size() == m),
            ErrorCode::kValidation, where + ": weight vector size mismatch");
    double total = 0.0;
    int truths = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double prob = p.probs[j];
      require(std::isfinite(prob) && prob >= 0.0 && prob <= 1.0, ErrorCode::kValidation,
              where + ": probability outside [0, 1]");
      total += prob;
      switch (p.labels[j]) {
        case PatternLabel::kGroundTruth:
          ++truths;
          g_sum += (prob - 1.0) * (prob - 1.0);
          ++g_n;
          break;
        case PatternLabel::kAggressive:
          c_sum += (p.w_c.empty() ? 1.0 : p.w_c[j]) * prob * prob;
          ++c_n;
          break;
        case PatternLabel::kDangerous:
          d_sum += (p.w_d.empty() ? 1.0 : p.w_d[j]) * prob * prob;
          ++d_n;
          break;
        case PatternLabel::kNeutral: break;
      }
    }
    require(std::abs(total - 1.0) <= 1e-9, ErrorCode::kValidation,
            where + ": probabilities do not sum to 1");
    require(truths == 1, ErrorCode::kValidation, where + ": needs exactly one ground-truth pattern");
  }
  BrierScores s;
  s.ground_truth_empty = g_n == 0;
  s.conservatism_empty = c_n == 0;
  s.non_defensiveness_empty = d_n == 0;
  s.ground_truth = g_n ? g_sum / g_n : 0.0;
  s.conservatism = c_n ? c_sum / c_n : 0.0;
  s.non_defensiveness = d_n ? d_sum / d_n : 0.0;
  s.total = s.ground_truth + s.conservatism + s.non_defensiveness;
  return s;
}

double med(const Trajectory& a, const Trajectory& b) {
  require(a.length() == b.length(), ErrorCode::kContract,
          "MED needs equal lengths (" + std::to_string(a.length()) + " vs " +
              std::to_string(b.length()) + ")");
  require(std::abs(a.dt() - b.dt()) <= 1e-9, ErrorCode::kContract, "MED needs equal dt");
  double sum = 0.0;
  for (int t = 0; t < a.length(); ++t) sum += (a.point(t) - b.point(t)).norm();
  return sum / a.length();
}

MedStats med_stats(std::span<const double> values) {
  MedStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  s.max = values[0];
  s.min = values[0];
  for (double v : values) {
    sum += v;
    s.max = std::max(s.max, v);
    s.min = std::min(s.min, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

EvaluationReport evaluate_suite(std::span<const TestCase> tests, const ParameterSet& params,
                                const ModelConfig& config, const PredictOptions& options) {
  require(!tests.empty(), ErrorCode::kValidation, "empty test set");
  struct Outcome {
    bool ok = false;
    double med = 0.0;
    LabeledPrediction pred;
    std::string error;
  };
  std::vector<Outcome> outcomes(tests.size());
  // Scenes run one at a time; each prediction parallelizes over decisions.
  detail::parallel_for(static_cast<int>(tests.size()), 1, [&](int i) {
    const TestCase& tc = tests[static_cast<std::size_t>(i)];
    Outcome& out = outcomes[static_cast<std::size_t>(i)];
    try {
      const PredictionMixture mix = predict(tc.truth.scene, params, config, options);
      const Trajectory& truth = tc.truth.future;
      require(truth.length() >= options.horizon, ErrorCode::kData,
              "ground-truth future shorter than the prediction horizon");
      out.med = med(mix.top().most_likely, truth.head(options.horizon));
      require(tc.labels.size() == mix.decisions.size(), ErrorCode::kData,
              "pattern labels do not match the role's decisions");
      for (const DecisionPrediction& d : mix.decisions) out.pred.probs.push_back(d.probability);
      out.pred.labels = tc.labels;
      out.pred.w_c = tc.w_c;
      out.pred.w_d = tc.w_d;
      out.ok = true;
    } catch (const Error& e) {
      out.error = tc.id + ": " + e.what();
    }
  });

  EvaluationReport report;
  std::vector<double> meds;
  std::vector<LabeledPrediction> preds;
  for (Outcome& o : outcomes) {
    if (!o.ok) {
      ++report.n_failures;
      report.failures.push_back(o.error);
      continue;
    }
    meds.push_back(o.med);
    preds.push_back(std::move(o.pred));
  }
  report.n_scenes = static_cast<int>(meds.size());
  report.med = med_stats(meds);
  if (!preds.empty()) report.brier = brier_scores(preds);
  return report;
}

std::string report_to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["med"] = {{"mean", r.med.mean}, {"max", r.med.max}, {"min", r.med.min}, {"std", r.med.std}};
  j["brier"] = {{"G", r.brier.ground_truth},
                {"C", r.brier.conservatism},
                {"D", r.brier.non_defensiveness},
                {"Bc", r.brier.total}};
  j["n_scenes"] = r.n_scenes;
  j["n_failures"] = r.n_failures;
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

}  // namespace hirl
