#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "hirl/cont_irl.hpp"
#include "hirl/dataio.hpp"
#include "hirl/disc_irl.hpp"
#include "hirl/evaluation.hpp"
#include "hirl/predictor.hpp"
#include "json.hpp"

#ifndef HIRL_VERSION
#define HIRL_VERSION "unknown"
#endif

namespace hirl::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kData:
    case ErrorCode::kConfigMismatch:
    case ErrorCode::kValidation:
    case ErrorCode::kDependency:
    case ErrorCode::kInvalidDecision:
    case ErrorCode::kContract:
      return kExitInput;
    case ErrorCode::kIo:
      return kExitIo;
    case ErrorCode::kDegenerateTrajectory:
    case ErrorCode::kProjectionFailure:
    case ErrorCode::kExtrapolation:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kCrossingOrder:
    case ErrorCode::kIllDefinedBearing:
    case ErrorCode::kNumericalFailure:
      return kExitNumerical;
  }
  return kExitNumerical;
}

RunConfig load_run_config(const fs::path& path) {
  require(fs::is_regular_file(path), ErrorCode::kValidation,
          "configuration file not found: " + path.string());
  const std::string text = read_text_file(path);
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorCode::kParse, path.string() + " is not valid JSON: " + e.what());
  }
  require(j.is_object(), ErrorCode::kParse, path.string() + " must contain a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(it.key() == "model" || it.key() == "generator", ErrorCode::kParse,
            "unknown configuration section '" + it.key() + "'");
  RunConfig rc;
  if (j.contains("model")) rc.model = model_config_from_json_string(j["model"].dump());
  if (j.contains("generator"))
    rc.generator = generator_config_from_json_string(j["generator"].dump());
  return rc;
}

std::string to_json_string(const RunConfig& c) {
  ojson j;
  j["model"] = ojson::parse(hirl::to_json_string(c.model));
  j["generator"] = ojson::parse(hirl::to_json_string(c.generator));
  return j.dump(2) + "\n";
}

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string role;
  int jobs = 1;
};

struct Manifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::kIo,
          "cannot create output directory " + dir.string());
}

void require_input(const fs::path& path, const char* what) {
  require(fs::is_regular_file(path), ErrorCode::kValidation,
          std::string(what) + " not found: " + path.string());
}

RunConfig resolve_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) rc.generator.seed = *c.seed;
  if (!c.role.empty()) rc.generator.role = role_from_string(c.role);
  validate(rc.model);
  require(c.jobs >= 1, ErrorCode::kValidation, "--jobs must be >= 1");
  return rc;
}

void write_manifest(const fs::path& dir, const Manifest& m, const Common& c, const RunConfig& rc,
                    std::chrono::steady_clock::time_point start) {
  ojson j;
  j["command"] = m.command;
  j["version"] = HIRL_VERSION;
  j["seed"] = c.seed ? ojson(*c.seed) : ojson(nullptr);
  j["role"] = c.role.empty() ? ojson(nullptr) : ojson(c.role);
  j["jobs"] = c.jobs;
  j["config"] = ojson::parse(to_json_string(rc));
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text_file_atomic(dir / ("manifest_" + m.command + ".json"), j.dump(2) + "\n");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void cmd_generate(const Common& c, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve_config(c);
  const fs::path dir(c.out);
  ensure_directory(dir);
  const SyntheticData data = generate_synthetic(rc.generator, rc.model);

  Manifest m{"generate", {}, {}};
  auto emit = [&](const std::vector<SyntheticScene>& scenes, const std::string& stem) {
    std::vector<SceneRecord> records;
    std::string truth = "scene_id,role,decision,p_first,p_second,initial_gap\n";
    for (const SyntheticScene& s : scenes) {
      records.push_back(to_record(s));
      const Demonstration& d = s.labelled.truth;
      truth += s.labelled.id + "," + std::string(to_string(d.scene.role)) + "," +
               std::string(to_string(d.decision)) + "," + format_double(s.true_probs[0]) + "," +
               format_double(s.true_probs[1]) + "," + format_double(s.initial_gap) + "\n";
    }
    const fs::path tracks = dir / (stem + ".csv");
    write_scene_records(tracks, records);
    write_text_file_atomic(dir / (stem + ".truth.csv"), truth);
    for (const fs::path& p : {tracks, sidecar_path(tracks), dir / (stem + ".truth.csv")})
      m.outputs.push_back(p.string());
  };
  emit(data.train, "train");
  emit(data.test, "test");
  write_manifest(dir, m, c, rc, start);
  out << "generated " << data.train.size() << " training and " << data.test.size()
      << " test scenes in " << dir.string() << "\n";
}

void cmd_train(const Common& c, const std::string& data_path, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve_config(c);
  require_input(data_path, "training data");
  const fs::path dir(c.out);
  ensure_directory(dir);
  const std::vector<Demonstration> demos = load_demonstrations(data_path, rc.model);
  const auto parts = partition_by_decision(demos);

  std::set<Role> roles = {Role::kMerging, Role::kLaneKeeping};
  if (!c.role.empty()) roles = {role_from_string(c.role)};
  std::set<Decision> needed;
  for (Role r : roles)
    for (Decision d : decisions_for(r)) needed.insert(d);
  if (needed.count(Decision::kMergeFront)) needed.insert(Decision::kYield);

  TrainOptions topts = TrainOptions::from_config(rc.model);
  topts.seed = c.seed.value_or(0);
  topts.jobs = c.jobs;

  ParameterSet params;
  std::string trace = "model,iteration,value\n";
  for (Decision d : {Decision::kYield, Decision::kPass, Decision::kMergeBack,
                     Decision::kMergeFront}) {
    if (!needed.count(d)) continue;
    auto it = parts.find(d);
    require(it != parts.end() && !it->second.empty(), ErrorCode::kValidation,
            "no demonstrations for " + std::string(to_string(d)));
    TrainOptions o = topts;
    if (d == Decision::kMergeFront) o.yield_params = yield_params_of(params.continuous);
    auto [p, run] = train_continuous(it->second, d, rc.model, o);
    for (std::size_t k = 0; k < run.objective_trace.size(); ++k)
      trace += std::string(to_string(d)) + "," + std::to_string(k) + "," +
               format_double(run.objective_trace[k]) + "\n";
    out << to_string(d) << ": " << it->second.size() << " demos, " << run.iterations
        << " iterations, objective " << format_double(run.objective_trace.back())
        << (run.converged ? "" : " (not converged)") << "\n";
    params.continuous.emplace(d, std::move(p));
  }

  const DiscreteTrainOptions dopts = DiscreteTrainOptions::from_config(rc.model);
  for (Role r : {Role::kLaneKeeping, Role::kMerging}) {
    if (!roles.count(r)) continue;
    std::vector<Demonstration> role_demos;
    for (const Demonstration& d : demos)
      if (d.scene.role == r) role_demos.push_back(d);
    auto [p, run] = train_discrete(role_demos, params.continuous, rc.model, dopts, c.jobs);
    for (std::size_t k = 0; k < run.gradient_norms.size(); ++k)
      trace += "psi_" + std::string(to_string(r)) + "," + std::to_string(k) + "," +
               format_double(run.gradient_norms[k]) + "\n";
    out << "psi " << to_string(r) << ": " << role_demos.size() << " demos, " << run.iterations
        << " iterations" << (run.converged ? "" : " (not converged)") << "\n";
    params.discrete.emplace(r, p);
  }

  const fs::path params_path = dir / "params.json";
  const fs::path trace_path = dir / "train_trace.csv";
  save_params(params_path, params, rc.model);
  write_text_file_atomic(trace_path, trace);
  write_manifest(dir, {"train", {data_path}, {params_path.string(), trace_path.string()}}, c, rc,
                 start);
  out << "wrote " << params_path.string() << "\n";
}

void cmd_predict(const Common& c, const std::string& params_path, const std::string& scenes_path,
                 const std::vector<std::string>& host_futures, const std::string& scene_id,
                 std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve_config(c);
  require_input(params_path, "parameter file");
  require_input(scenes_path, "scene file");
  for (const std::string& f : host_futures) require_input(f, "host-future file");
  const fs::path dir(c.out);
  ensure_directory(dir);
  const ParameterSet params = load_params(params_path, rc.model);
  std::vector<SceneRecord> records = read_scene_records(scenes_path, rc.model);
  if (!scene_id.empty()) {
    std::erase_if(records, [&](const SceneRecord& r) { return r.id != scene_id; });
    require(!records.empty(), ErrorCode::kValidation, "no scene '" + scene_id + "'");
  }
  std::vector<std::map<std::string, Trajectory>> plans;
  for (const std::string& f : host_futures) plans.push_back(read_host_plans(f, rc.model));

  PredictOptions popts = PredictOptions::from_config(rc.model);
  popts.seed = c.seed.value_or(0);
  popts.jobs = c.jobs;

  Manifest m{"predict", {params_path, scenes_path}, {}};
  m.inputs.insert(m.inputs.end(), host_futures.begin(), host_futures.end());
  for (const SceneRecord& rec : records) {
    std::vector<Trajectory> futures;
    for (std::size_t k = 0; k < plans.size(); ++k) {
      auto it = plans[k].find(rec.id);
      if (it == plans[k].end()) {
        require(plans[k].size() == 1, ErrorCode::kData,
                host_futures[k] + " has no host plan for scene '" + rec.id + "'");
        it = plans[k].begin();
      }
      futures.push_back(it->second);
    }
    if (futures.empty()) futures.push_back(rec.scene.host_future);
    const std::vector<PredictionMixture> mixtures =
        predict_sensitivity(rec.scene, params, futures, rc.model, popts);
    for (std::size_t k = 0; k < mixtures.size(); ++k) {
      std::string stem = "prediction_" + rec.id;
      if (!host_futures.empty()) stem += "_plan" + std::to_string(k);
      const fs::path json_path = dir / (stem + ".json");
      const fs::path csv_path = dir / (stem + ".csv");
      write_text_file_atomic(json_path, prediction_to_json(mixtures[k]));
      write_text_file_atomic(csv_path, prediction_to_csv(mixtures[k]));
      m.outputs.push_back(json_path.string());
      m.outputs.push_back(csv_path.string());
      out << rec.id;
      if (!host_futures.empty()) out << " plan " << k;
      for (const DecisionPrediction& d : mixtures[k].decisions)
        out << "  " << to_string(d.decision) << "=" << format_double(d.probability);
      out << "\n";
    }
  }
  write_manifest(dir, m, c, rc, start);
}

void cmd_evaluate(const Common& c, const std::string& params_path, const std::string& test_path,
                  std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve_config(c);
  require_input(params_path, "parameter file");
  require_input(test_path, "test data");
  const fs::path dir(c.out);
  ensure_directory(dir);
  const ParameterSet params = load_params(params_path, rc.model);
  std::vector<TestCase> tests = load_test_cases(test_path, rc.model);
  if (!c.role.empty()) {
    const Role r = role_from_string(c.role);
    std::erase_if(tests, [&](const TestCase& t) { return t.truth.scene.role != r; });
  }
  PredictOptions popts = PredictOptions::from_config(rc.model);
  popts.seed = c.seed.value_or(0);
  popts.jobs = c.jobs;
  const EvaluationReport report = evaluate_suite(tests, params, rc.model, popts);

  const fs::path report_path = dir / "report.json";
  write_text_file_atomic(report_path, report_to_json(report));
  write_manifest(dir, {"evaluate", {params_path, test_path}, {report_path.string()}}, c, rc, start);
  out << "scenes " << report.n_scenes << ", failures " << report.n_failures << "\n"
      << "MED mean " << format_double(report.med.mean) << " max " << format_double(report.med.max)
      << " min " << format_double(report.med.min) << " std " << format_double(report.med.std)
      << "\n"
      << "G " << format_double(report.brier.ground_truth) << " C "
      << format_double(report.brier.conservatism) << " D "
      << format_double(report.brier.non_defensiveness) << " Bc "
      << format_double(report.brier.total) << "\n";
}

void add_common(CLI::App* app, Common& c, bool needs_out = true) {
  app->add_option("--config", c.config, "JSON configuration with model/generator sections");
  app->add_option("--seed", c.seed, "Seed for randomized steps");
  auto* o = app->add_option("--out", c.out, "Output directory");
  if (needs_out) o->required();
  app->add_option("--role", c.role, "merging or lane-keeping")
      ->check(CLI::IsMember({"merging", "lane-keeping"}));
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical IRL for interaction-aware merge prediction", "hirl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HIRL_VERSION);

  Common common;
  std::string data, params, scenes, test, scene_id;
  std::vector<std::string> host_futures;

  auto* gen = app.add_subcommand("generate", "Write synthetic train/test scene files");
  add_common(gen, common);
  auto* train = app.add_subcommand("train", "Learn continuous and discrete parameters");
  add_common(train, common);
  train->add_option("--data", data, "Training tracks CSV")->required();
  auto* pred = app.add_subcommand("predict", "Predict decision mixtures for scenes");
  add_common(pred, common);
  pred->add_option("--params", params, "Parameter file")->required();
  pred->add_option("--scenes", scenes, "Scene tracks CSV")->required();
  pred->add_option("--host-future", host_futures, "Host plan tracks CSV (repeatable)");
  pred->add_option("--scene-id", scene_id, "Only this scene");
  auto* eval = app.add_subcommand("evaluate", "MED and Brier scores on a labelled test set");
  add_common(eval, common);
  eval->add_option("--params", params, "Parameter file")->required();
  eval->add_option("--test", test, "Test tracks CSV")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*gen) cmd_generate(common, out);
    else if (*train) cmd_train(common, data, out);
    else if (*pred) cmd_predict(common, params, scenes, host_futures, scene_id, out);
    else if (*eval) cmd_evaluate(common, params, test, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace hirl::cli
