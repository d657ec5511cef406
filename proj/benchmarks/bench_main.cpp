#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "hirl/cont_irl.hpp"
#include "hirl/disc_irl.hpp"
#include "hirl/evaluation.hpp"
#include "hirl/generator.hpp"
#include "hirl/predictor.hpp"

namespace {

using namespace hirl;

struct Fixture {
  ModelConfig config;
  GeneratorConfig gen = GeneratorConfig::defaults();
  ParameterSet truth;
  SyntheticData data;

  Fixture() {
    gen.train_scenes = 40;
    gen.test_scenes = 4;
    gen.seed = 3;
    truth = ground_truth_params(gen);
    data = generate_synthetic(gen, config);
  }

  std::vector<Demonstration> demos(Decision d) const {
    std::vector<Demonstration> out;
    for (const SyntheticScene& s : data.train)
      if (s.labelled.truth.decision == d) out.push_back(s.labelled.truth);
    return out;
  }

  std::shared_ptr<const ContinuousParams> yield() const {
    return yield_params_of(truth.continuous);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

const Demonstration& first_demo(Decision d) {
  static std::map<Decision, Demonstration> cache;
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, fixture().demos(d).front()).first;
  return it->second;
}

const std::array<Decision, 4> kDecisions{Decision::kMergeBack, Decision::kMergeFront,
                                         Decision::kYield, Decision::kPass};

void BM_CostGradientHessian(benchmark::State& state) {
  const Fixture& f = fixture();
  const Decision d = kDecisions[static_cast<std::size_t>(state.range(0))];
  const Demonstration& demo = first_demo(d);
  const FeatureContext ctx(d, demo.scene, demo.future.length(), f.config, f.yield());
  const ContinuousParams& p = f.truth.continuous.at(d);
  for (auto _ : state) benchmark::DoNotOptimize(cost_gradient_hessian(p, ctx, demo.future));
  state.SetLabel(std::string(to_string(d)));
}
BENCHMARK(BM_CostGradientHessian)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_LaplaceObjective(benchmark::State& state) {
  const Fixture& f = fixture();
  const Decision d = kDecisions[static_cast<std::size_t>(state.range(0))];
  const std::vector<Demonstration> demos = f.demos(d);
  const ContinuousParams& p = f.truth.continuous.at(d);
  for (auto _ : state) benchmark::DoNotOptimize(laplace_objective(p, demos, f.config, f.yield()));
  state.SetLabel(std::string(to_string(d)) + " x" + std::to_string(demos.size()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(demos.size()));
}
BENCHMARK(BM_LaplaceObjective)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_SolveMostLikely(benchmark::State& state) {
  const Fixture& f = fixture();
  const Decision d = kDecisions[static_cast<std::size_t>(state.range(0))];
  const Demonstration& demo = first_demo(d);
  const FeatureContext ctx(d, demo.scene, f.config.predict_horizon, f.config, f.yield());
  const ContinuousParams& p = f.truth.continuous.at(d);
  const SolverOptions opts = SolverOptions::from_config(f.config);
  int iterations = 0;
  for (auto _ : state) {
    const SolverResult r = solve_most_likely(p, ctx, opts);
    iterations = r.iterations;
    benchmark::DoNotOptimize(r.cost);
  }
  state.counters["newton_iters"] = iterations;
  state.SetLabel(std::string(to_string(d)));
}
BENCHMARK(BM_SolveMostLikely)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const Fixture& f = fixture();
  const Scene& scene = f.data.test.front().labelled.truth.scene;
  PredictOptions opts = PredictOptions::from_config(f.config);
  opts.samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predict(scene, f.truth, f.config, opts));
  state.SetLabel(std::string(to_string(scene.role)));
}
BENCHMARK(BM_Predict)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
