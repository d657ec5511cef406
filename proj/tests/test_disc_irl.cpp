#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hirl/disc_irl.hpp"
#include "hirl/error.hpp"
#include "hirl/generator.hpp"
#include "hirl/predictor.hpp"
#include "support.hpp"

namespace hirl {
namespace {

using test::line;
constexpr double kPi = std::numbers::pi;

TEST(RotationAngle, Examples) {
  const int n = 20;
  const Trajectory me = line(n, {0, 0}, {20, 0});
  EXPECT_NEAR(rotation_angle_feature(me, line(n, {10, 0}, {20, 0})), 0.0, 1e-12);
  EXPECT_NEAR(rotation_angle_feature(me, line(n, {-10, 0}, {20, 0})), n * kPi, 1e-9);
  EXPECT_NEAR(rotation_angle_feature(me, line(n, {0, 3}, {20, 0})), n * kPi / 2, 1e-9);
}

TEST(RotationAngle, ContinuousWithHostBehind) {
  const int n = 20;
  const Trajectory me = line(n, {0, 0}, {20, 0});
  const double above = rotation_angle_feature(me, line(n, {-10, 1e-3}, {20, 0}));
  const double below = rotation_angle_feature(me, line(n, {-10, -1e-3}, {20, 0}));
  EXPECT_NEAR(above, below, 1e-12);
  EXPECT_NEAR(above, n * (kPi - 1e-4), 1e-9);
  EXPECT_NEAR(rotation_angle_feature(me, line(n, {0, -3}, {20, 0})), n * kPi / 2, 1e-9);
}

TEST(RotationAngle, CoincidentIsIllDefined) {
  const Trajectory me = line(10, {0, 0}, {20, 0});
  try {
    rotation_angle_feature(me, me);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIllDefinedBearing);
  }
}

TEST(RotationAngle, TranslationInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 2.0);
  Eigen::VectorXd a(40), b(40);
  for (int i = 0; i < 40; ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng) + 5.0;
  }
  const double base = rotation_angle_feature(Trajectory(a, 0.1), Trajectory(b, 0.1));
  Eigen::VectorXd shift(40);
  for (int i = 0; i < 20; ++i) shift.segment<2>(2 * i) = Eigen::Vector2d(112.5, -3.25);
  EXPECT_NEAR(rotation_angle_feature(Trajectory(a + shift, 0.1), Trajectory(b + shift, 0.1)), base,
              1e-9);
}

TEST(DecisionProbabilities, Examples) {
  const std::vector<Eigen::Vector2d> f = {{3.0, 1.0}, {-2.0, 2.0}};
  const std::vector<double> uni = decision_probabilities(Eigen::Vector2d::Zero(), f);
  EXPECT_EQ(uni[0], 0.5);
  EXPECT_EQ(uni[1], 0.5);
  const std::vector<Eigen::Vector2d> same = {{1.5, 7.0}, {1.5, 7.0}};
  EXPECT_EQ(decision_probabilities(Eigen::Vector2d(0.3, -2.0), same)[0], 0.5);
  const std::vector<Eigen::Vector2d> costs = {{0.0, 1.0}, {0.0, 2.0}};
  const std::vector<double> p = decision_probabilities(Eigen::Vector2d(0, 1), costs);
  EXPECT_NEAR(p[0], 0.7310585786300049, 1e-12);
  EXPECT_NEAR(p[1], 0.2689414213699951, 1e-12);
}

TEST(DecisionProbabilities, NormalizedAndShiftInvariant) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector2d psi(nd(rng) / 50.0, nd(rng) / 50.0);
    std::vector<Eigen::Vector2d> f = {{nd(rng), nd(rng)}, {nd(rng), nd(rng)}};
    const std::vector<double> p = decision_probabilities(psi, f);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[0], 1.0);
    const Eigen::Vector2d shift(nd(rng), nd(rng));
    for (auto& v : f) v += shift;
    const std::vector<double> q = decision_probabilities(psi, f);
    EXPECT_NEAR(q[0], p[0], 1e-9);
  }
  // Overflow safety.
  const std::vector<Eigen::Vector2d> huge = {{0.0, 1e6}, {0.0, 1e6 + 1.0}};
  const std::vector<double> p = decision_probabilities(Eigen::Vector2d(0, 1), huge);
  EXPECT_NEAR(p[0], 0.7310585786300049, 1e-9);
}

TEST(DecisionProbabilities, StandardizedParams) {
  DiscreteParams dp;
  dp.psi = Eigen::Vector2d(0.0, 1.0);
  dp.mean = Eigen::Vector2d(10.0, 100.0);
  dp.scale = Eigen::Vector2d(2.0, 50.0);
  const std::vector<DecisionFeature> f = {{Decision::kMergeFront, 0.0, 150.0},
                                          {Decision::kMergeBack, 0.0, 200.0}};
  const std::vector<double> p = decision_probabilities(dp, f);
  EXPECT_NEAR(p[0], 0.7310585786300049, 1e-12);
}

// ---------------------------------------------------------------------------

TEST(DiscreteTraining, SymmetricSplitGivesZeroPsi) {
  std::vector<DiscreteSample> samples;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d a(nd(rng), nd(rng)), b(nd(rng), nd(rng));
    samples.push_back({{a, b}, 0});
    samples.push_back({{a, b}, 1});
  }
  const auto [p, run] = train_discrete_features(Role::kMerging, samples, {});
  EXPECT_LT(p.psi.norm(), 1e-6);
  EXPECT_TRUE(run.converged);
}

TEST(DiscreteTraining, Stationarity) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Vector2d psi(0.8, -0.5);
  std::vector<DiscreteSample> samples;
  for (int i = 0; i < 300; ++i) {
    DiscreteSample s{{Eigen::Vector2d(nd(rng), nd(rng)), Eigen::Vector2d(nd(rng), nd(rng))}, 0};
    const std::vector<Eigen::Vector2d> f(s.features.begin(), s.features.end());
    s.chosen = u(rng) < decision_probabilities(psi, f)[0] ? 0 : 1;
    samples.push_back(s);
  }
  DiscreteTrainOptions o;
  o.max_iterations = 50000;
  o.gradient_tolerance = 1e-7;
  const auto [p, run] = train_discrete_features(Role::kMerging, samples, o);
  ASSERT_TRUE(run.converged);

  // Empirical vs model-expected standardized features.
  Eigen::Vector2d empirical = Eigen::Vector2d::Zero(), expected = Eigen::Vector2d::Zero();
  for (const DiscreteSample& s : samples) {
    const Eigen::Vector2d z0 = p.standardize(s.features[0]), z1 = p.standardize(s.features[1]);
    const std::vector<Eigen::Vector2d> z = {z0, z1};
    const std::vector<double> q = decision_probabilities(p.psi, z);
    empirical += s.chosen == 0 ? z0 : z1;
    expected += q[0] * z0 + q[1] * z1;
  }
  empirical /= samples.size();
  expected /= samples.size();
  EXPECT_LT((empirical - expected).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((discrete_gradient(p, samples) - (empirical - expected)).norm(), 1e-12);
  // Gradient norms shrink along the run.
  EXPECT_LT(run.gradient_norms.back(), run.gradient_norms.front());
}

TEST(DiscreteTraining, EmptyIsValidationError) {
  try {
    train_discrete_features(Role::kMerging, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
}

// ---------------------------------------------------------------------------

TEST(Sampling, PerturbationProperties) {
  const Trajectory ml = line(30, {0, -3.7}, {20, 0.2});
  const std::vector<Trajectory> zero = perturb_samples(ml, 5, 0.0, 1);
  ASSERT_EQ(zero.size(), 5u);
  for (const Trajectory& t : zero) EXPECT_EQ(t, ml);

  const std::vector<Trajectory> a = perturb_samples(ml, 20, 0.5, 42);
  const std::vector<Trajectory> b = perturb_samples(ml, 20, 0.5, 42);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_EQ(a[0], ml);
  EXPECT_EQ(a[3].point(0), ml.point(0));
  EXPECT_EQ(a[3].point(1), ml.point(1));
}

TEST(Sampling, MeanConvergesToMostLikely) {
  const int k = 1000;
  const double sigma = 0.5;
  const Trajectory ml = line(30, {0, -3.7}, {20, 0.2});
  const std::vector<Trajectory> s = perturb_samples(ml, k, sigma, 7);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ml.coords().size());
  for (const Trajectory& t : s) mean += t.coords();
  mean /= k;
  EXPECT_LT((mean - ml.coords()).cwiseAbs().maxCoeff(), 3.0 * sigma / std::sqrt(k));
}

class MinCost : public ::testing::Test {
 protected:
  ModelConfig config;
  Scene scene = test::merge_scene(config);
};

TEST_F(MinCost, PureGoalIsZero) {
  const ContinuousParams p{Decision::kMergeBack, {FeatureId::kGoal}, Eigen::VectorXd::Constant(1, 0.8)};
  // Anchored waypoints cannot reach the goals; place the goals on them.
  double v = min_cost_feature(Decision::kMergeBack, scene, p, config);
  FeatureContext ctx(Decision::kMergeBack, scene, config.decision_horizon, config);
  const Trajectory cv = extrapolate(scene.hist_predicted, config.decision_horizon);
  const double anchor_cost = 0.8 * ((cv.point(0) - ctx.goals().segment<2>(0)).squaredNorm() +
                                    (cv.point(1) - ctx.goals().segment<2>(2)).squaredNorm());
  EXPECT_NEAR(v, anchor_cost, 1e-9 * anchor_cost);

  // With the predicted vehicle sitting on the goal lane 10 m behind the host
  // the anchors coincide with the goals and the minimum is zero.
  Scene on_goal = scene;
  on_goal.hist_predicted = test::history({-10.0, 0.0}, {20.0, 0.0}, config.history_steps);
  EXPECT_NEAR(min_cost_feature(Decision::kMergeBack, on_goal, p, config), 0.0, 1e-12);
}

TEST_F(MinCost, GoalPlusAccMatchesGridSearch) {
  // Horizon three: after the two anchored waypoints only the third is free,
  // so a dense grid over its two coordinates spans the whole feasible set.
  ModelConfig c = config;
  c.decision_horizon = 3;
  const ContinuousParams p{Decision::kMergeBack, {FeatureId::kAcc, FeatureId::kGoal},
                           Eigen::Vector2d(0.05, 1.0)};
  const double value = min_cost_feature(Decision::kMergeBack, scene, p, c);

  FeatureContext ctx(Decision::kMergeBack, scene, 3, c);
  const Trajectory cv = extrapolate(scene.hist_predicted, 3);
  auto eval = [&](double x, double y) {
    Eigen::VectorXd co = cv.coords();
    co[4] = x;
    co[5] = y;
    return cost(p, ctx, Trajectory(co, c.dt));
  };
  double best = std::numeric_limits<double>::infinity();
  double cx = cv.x(2), cy = cv.y(2);
  for (double span : {20.0, 2.0, 0.2, 0.02}) {
    double bx = cx, by = cy;
    for (int i = -100; i <= 100; ++i)
      for (int j = -100; j <= 100; ++j) {
        const double x = cx + span * i / 100.0, y = cy + span * j / 100.0;
        const double v = eval(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    cx = bx;
    cy = by;
  }
  EXPECT_NEAR(value, best, 0.01 * best);
  EXPECT_LE(value, best * (1.0 + 1e-9));
}

TEST_F(MinCost, SingleFeatureHomogeneity) {
  const ContinuousParams p{Decision::kMergeBack, {FeatureId::kGoal}, Eigen::VectorXd::Constant(1, 0.5)};
  const ContinuousParams q{Decision::kMergeBack, {FeatureId::kGoal}, Eigen::VectorXd::Constant(1, 1.5)};
  const double a = min_cost_feature(Decision::kMergeBack, scene, p, config);
  const double b = min_cost_feature(Decision::kMergeBack, scene, q, config);
  EXPECT_NEAR(b, 3.0 * a, 1e-9 * b);
}

TEST_F(MinCost, SampleTrajectoriesStartAtMostLikely) {
  const GeneratorConfig gen = GeneratorConfig::defaults();
  const ContinuousParams p =
      ContinuousParams::for_decision(Decision::kMergeBack, gen.theta.at(Decision::kMergeBack));
  const std::vector<Trajectory> s =
      sample_trajectories(Decision::kMergeBack, scene, p, 4, 0.0, 3, config);
  const Trajectory ml = most_likely_trajectory(p, scene, Decision::kMergeBack,
                                               config.predict_horizon, config);
  ASSERT_EQ(s.size(), 4u);
  for (const Trajectory& t : s) EXPECT_EQ(t, ml);
}

}  // namespace
}  // namespace hirl
