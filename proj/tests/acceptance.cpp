// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "hirl/cont_irl.hpp"
#include "hirl/dataio.hpp"
#include "hirl/disc_irl.hpp"
#include "hirl/evaluation.hpp"
#include "hirl/generator.hpp"
#include "hirl/predictor.hpp"
#include "support.hpp"

namespace hirl {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];
template <typename... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

constexpr Decision kAll[] = {Decision::kYield, Decision::kPass, Decision::kMergeBack,
                             Decision::kMergeFront};

// 1. Cost gradients against central differences; Hessian symmetry.
Outcome gradient_correctness() {
  const ModelConfig config;
  const GeneratorConfig gen = GeneratorConfig::defaults();
  const auto yield = std::make_shared<ContinuousParams>(
      ContinuousParams::for_decision(Decision::kYield, gen.theta.at(Decision::kYield)));
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> log_theta(std::log(0.01), std::log(1.0));
  bool ok = true;
  std::string detail;
  for (Decision d : kAll) {
    const int draws = 100;
    double worst = 0.0, asym = 0.0;
    const std::vector<Scene> scenes =
        test::random_scenes(role_of(d), draws, 500 + static_cast<int>(d), config);
    for (const Scene& s : scenes) {
      const int dim = static_cast<int>(feature_set_for(d).size());
      Eigen::VectorXd th(dim);
      for (int i = 0; i < dim; ++i) th[i] = std::exp(log_theta(rng));
      const ContinuousParams p = ContinuousParams::for_decision(d, th);
      const FeatureContext ctx(d, s, config.predict_horizon, config, yield);
      const Trajectory t = test::random_near(s, config.predict_horizon, 0.2, rng);
      const CostReport r = cost_gradient_hessian(p, ctx, t);
      const Eigen::VectorXd fd = test::central_gradient(
          [&](const Eigen::VectorXd& x) {
            return cost(p, ctx, Trajectory(x, config.dt), CostMode::kSmoothed);
          },
          t.coords(), 1e-5);
      worst = std::max(worst, test::relative_error(r.gradient, fd));
      asym = std::max(asym, (r.hessian - r.hessian.transpose()).cwiseAbs().maxCoeff());
    }
    const double tol = d == Decision::kMergeFront ? 1e-4 : 1e-5;
    ok = ok && worst < tol && asym <= 1e-9;
    detail += fmt("%s %.1e/%.0e ", std::string(to_string(d)).c_str(), worst, tol);
  }
  return {ok, detail + "(max relative gradient error / tolerance)"};
}

// 2. Goal-only model against closed forms.
Outcome goal_only_oracle() {
  const ModelConfig config;
  const Scene scene = test::merge_scene(config);
  const int n = config.train_horizon;
  const FeatureContext ctx(Decision::kMergeBack, scene, n, config);
  auto params = [](double th) {
    return ContinuousParams{Decision::kMergeBack, {FeatureId::kGoal},
                            Eigen::VectorXd::Constant(1, th)};
  };

  // (a) most-likely trajectory reaches the goals past the anchors
  const SolverResult r = solve_most_likely(params(0.8), ctx, SolverOptions::from_config(config));
  double a_err = 0.0;
  for (int t = 2; t < n; ++t)
    a_err = std::max(a_err, (r.trajectory.point(t) - ctx.goals().segment<2>(2 * t)).norm());

  // (b) objective per demo, no anchors
  std::mt19937_64 rng(202);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<Demonstration> demos;
  double total = 0.0, b_err = 0.0;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd delta(2 * n);
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = nd(rng);
    total += delta.squaredNorm();
    demos.push_back({Trajectory(ctx.goals() + delta, config.dt), Decision::kMergeBack, scene});
    const double th = 0.2 + 0.3 * k;
    const double v =
        laplace_objective(params(th), std::span(&demos.back(), 1), config, nullptr, 0);
    const double expected = -2.0 * n * std::log(2.0 * th) + 2.0 * th * delta.squaredNorm();
    b_err = std::max(b_err, std::abs(v - expected) / std::max(1.0, std::abs(expected)));
  }

  // (c) trained weight against the closed-form optimum
  TrainOptions o = TrainOptions::from_config(config);
  o.features = std::vector<FeatureId>{FeatureId::kGoal};
  o.anchored_waypoints = 0;
  const auto [p, run] = train_continuous(demos, Decision::kMergeBack, config, o);
  const double optimum = n * static_cast<double>(demos.size()) / total;
  const double c_err = std::abs(p.theta[0] - optimum) / optimum;

  return {a_err <= 1e-6 && b_err <= 1e-9 && c_err <= 0.01,
          fmt("ML %.1e m, objective %.1e, theta %.2e relative", a_err, b_err, c_err)};
}

// 3. Continuous weights recovered from noisy synthetic demonstrations.
Outcome continuous_recovery() {
  const ModelConfig config;
  const GeneratorConfig gen = GeneratorConfig::defaults();
  const ParameterSet truth = ground_truth_params(gen);
  const auto yield = yield_params_of(truth.continuous);
  bool ok = true;
  std::string detail;
  for (Decision d : kAll) {
    const ContinuousParams& star = truth.continuous.at(d);
    std::mt19937_64 rng(300 + static_cast<int>(d));
    std::vector<Demonstration> demos;
    for (const Scene& s : test::random_scenes(role_of(d), 20, 310 + static_cast<int>(d), config)) {
      const FeatureContext ctx(d, s, config.train_horizon, config, yield);
      const Trajectory ml = most_likely_trajectory(star, s, d, config.train_horizon, config, yield);
      demos.push_back({add_demo_noise(ml, star, ctx, gen, rng), d, s});
    }
    TrainOptions o = TrainOptions::from_config(config);
    o.yield_params = yield;
    const auto [learned, run] = train_continuous(demos, d, config, o);
    const double cos = test::cosine(learned.theta, star.theta);

    std::vector<double> meds;
    for (const Scene& s : test::random_scenes(role_of(d), 20, 390 + static_cast<int>(d), config)) {
      const int h = config.predict_horizon;
      meds.push_back(med(most_likely_trajectory(learned, s, d, h, config, yield),
                         most_likely_trajectory(star, s, d, h, config, yield)));
    }
    const double mean = med_stats(meds).mean;
    ok = ok && cos >= 0.9 && mean <= 0.3;
    detail += fmt("%s cos %.4f MED %.3f m; ", std::string(to_string(d)).c_str(), cos, mean);
  }
  return {ok, detail};
}

// 4. Discrete weights recovered from decisions drawn from the true softmax.
Outcome discrete_recovery() {
  const ModelConfig config;
  const ParameterSet truth = ground_truth_params(GeneratorConfig::defaults());
  const auto yield = yield_params_of(truth.continuous);
  bool ok = true;
  std::string detail;
  for (Role role : {Role::kMerging, Role::kLaneKeeping}) {
    GeneratorConfig gen = GeneratorConfig::defaults();
    gen.role = role;
    gen.train_scenes = 500;
    gen.test_scenes = 100;
    gen.seed = role == Role::kMerging ? 41 : 42;
    const SyntheticData data = generate_synthetic(gen, config);
    std::vector<Demonstration> demos;
    for (const SyntheticScene& s : data.train) demos.push_back(s.labelled.truth);

    DiscreteTrainOptions o = DiscreteTrainOptions::from_config(config);
    o.step = 0.5;
    o.max_iterations = 20000;
    o.gradient_tolerance = 1e-6;
    const auto [learned, run] = train_discrete(demos, truth.continuous, config, o);

    std::vector<DiscreteSample> samples;
    for (const Demonstration& d : demos)
      samples.push_back(discrete_sample(d, truth.continuous, config));
    const double stationarity = discrete_gradient(learned, samples).cwiseAbs().maxCoeff();

    double tv = 0.0;
    for (const SyntheticScene& s : data.test) {
      const Scene& scene = s.labelled.truth.scene;
      std::vector<DecisionFeature> f;
      for (Decision d : decisions_for(role))
        f.push_back(decision_feature(d, scene, truth.continuous.at(d), config, yield));
      const std::vector<double> p = decision_probabilities(learned, f);
      tv += std::abs(p[0] - s.true_probs[0]);
    }
    tv /= static_cast<double>(data.test.size());
    ok = ok && tv <= 0.05 && stationarity <= 1e-3;
    detail += fmt("%s TV %.4f stationarity %.1e; ", std::string(to_string(role)).c_str(), tv,
                  stationarity);
  }
  return {ok, detail};
}

// 5. Probabilities and sample weights are normalized.
Outcome normalization() {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double p_err = 0.0, w_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double scale = std::pow(10.0, 4.0 * u(rng));
    const Eigen::Vector2d psi(nd(rng), nd(rng));
    const std::vector<Eigen::Vector2d> f = {scale * Eigen::Vector2d(nd(rng), nd(rng)),
                                            scale * Eigen::Vector2d(nd(rng), nd(rng))};
    const std::vector<double> p = decision_probabilities(psi, f);
    p_err = std::max(p_err, std::abs(p[0] + p[1] - 1.0));

    std::vector<double> costs(1 + trial % 150);
    for (double& c : costs) c = scale * std::abs(nd(rng));
    const std::vector<double> w = softmax_weights(costs);
    double total = 0.0;
    for (double x : w) total += x;
    w_err = std::max(w_err, std::abs(total - 1.0));
  }
  const std::vector<Eigen::Vector2d> f = {{3.0, -1.0}, {0.5, 8.0}};
  const std::vector<double> uni = decision_probabilities(Eigen::Vector2d::Zero(), f);
  const bool half = uni[0] == 0.5 && uni[1] == 0.5;
  return {p_err <= 1e-12 && w_err <= 1e-9 && half,
          fmt("probability %.1e, weights %.1e, psi=0 %s", p_err, w_err, half ? "0.5/0.5" : "uneven")};
}

// 6. Metric hand cases.
Outcome metric_oracles() {
  const Trajectory a = test::line(30, {0, 0}, {0, 0});
  const Trajectory b = test::line(30, {3, 4}, {0, 0});
  const bool med_ok = med(a, b) == 5.0;

  using L = PatternLabel;
  const std::vector<LabeledPrediction> two = {{{0.5, 0.5}, {L::kGroundTruth, L::kDangerous}, {}, {}}};
  const std::vector<LabeledPrediction> four = {
      {{0.25, 0.25, 0.25, 0.25}, {L::kGroundTruth, L::kAggressive, L::kDangerous, L::kNeutral}, {}, {}}};
  const BrierScores s2 = brier_scores(two), s4 = brier_scores(four);
  const double hand = std::max({std::abs(s2.ground_truth - 0.25), std::abs(s2.non_defensiveness - 0.25),
                                std::abs(s2.total - 0.5), std::abs(s4.ground_truth - 0.5625),
                                std::abs(s4.conservatism - 0.0625),
                                std::abs(s4.non_defensiveness - 0.0625)});

  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool exact = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<LabeledPrediction> preds;
    for (int i = 0; i < 1 + trial % 20; ++i) {
      LabeledPrediction p;
      double total = 0.0;
      for (int j = 0; j < 4; ++j) total += p.probs.emplace_back(u(rng));
      for (double& v : p.probs) v /= total;
      const int truth = static_cast<int>(4 * u(rng)) % 4;
      for (int j = 0; j < 4; ++j)
        p.labels.push_back(j == truth ? L::kGroundTruth : static_cast<L>(1 + static_cast<int>(3 * u(rng)) % 3));
      p.w_c.assign(4, u(rng));
      p.w_d.assign(4, u(rng));
      preds.push_back(p);
    }
    const BrierScores s = brier_scores(preds);
    exact = exact && s.total == s.ground_truth + s.conservatism + s.non_defensiveness;
  }
  return {med_ok && hand <= 1e-12 && exact,
          fmt("MED %.17g, Brier hand cases %.1e, decomposition %s", med(a, b), hand,
              exact ? "exact" : "inexact")};
}

// 7. Opening the gap raises the probability of merging in front.
Outcome interaction_sensitivity() {
  const ModelConfig config;
  const fs::path dir = fs::path(HIRL_DATA_DIR) / "benchmark";
  const std::vector<SceneRecord> recs = read_scene_records(dir / "scene.csv", config);
  const ParameterSet params = load_params(dir / "params.json", config);
  const std::vector<Trajectory> plans = {
      read_host_plans(dir / "host_open.csv", config).begin()->second,
      read_host_plans(dir / "host_close.csv", config).begin()->second};
  const auto out = predict_sensitivity(recs.at(0).scene, params, plans, config,
                                       PredictOptions::from_config(config));
  const double open = out[0].probability(Decision::kMergeFront);
  const double close = out[1].probability(Decision::kMergeFront);
  return {open - close >= 0.2, fmt("P(MergeFront) open %.4f close %.4f, TV %.4f", open, close,
                                   open - close)};
}

// 8. Full pipeline twice with one seed gives identical artifacts.
Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / ("hirl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::ostringstream sink;
  auto step = [&](std::vector<std::string> args) {
    const int code = cli::run(args, sink, sink);
    if (code != 0) throw std::runtime_error("exit " + std::to_string(code) + ": " + sink.str());
  };
  std::string artifacts[2][2];
  for (int k = 0; k < 2; ++k) {
    const std::string run = (root / ("run" + std::to_string(k))).string();
    step({"generate", "--seed", "7", "--out", run + "/data"});
    step({"train", "--seed", "7", "--data", run + "/data/train.csv", "--out", run + "/model"});
    step({"predict", "--seed", "7", "--params", run + "/model/params.json", "--scenes",
          run + "/data/test.csv", "--out", run + "/pred"});
    step({"evaluate", "--seed", "7", "--params", run + "/model/params.json", "--test",
          run + "/data/test.csv", "--out", run + "/eval"});
    artifacts[k][0] = read_text_file(run + "/model/params.json");
    artifacts[k][1] = read_text_file(run + "/eval/report.json");
  }
  fs::remove_all(root);
  const bool same = artifacts[0][0] == artifacts[1][0] && artifacts[0][1] == artifacts[1][1];
  return {same, same ? "params.json and report.json byte-identical" : "artifacts differ"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace hirl

int main(int argc, char** argv) {
  using namespace hirl;
  const std::vector<Criterion> all = {
      {1, "gradient correctness", 60, gradient_correctness},
      {2, "closed-form quadratic oracle", 60, goal_only_oracle},
      {3, "continuous parameter recovery", 300, continuous_recovery},
      {4, "discrete-choice recovery", 300, discrete_recovery},
      {5, "softmax and mixture normalization", 60, normalization},
      {6, "metric oracles", 60, metric_oracles},
      {7, "interaction sensitivity", 30, interaction_sensitivity},
      {8, "end-to-end determinism", 900, end_to_end_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %d %s: %s [%.1f s of %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
