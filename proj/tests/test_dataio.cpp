#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hirl/dataio.hpp"
#include "hirl/error.hpp"
#include "hirl/generator.hpp"
#include "json.hpp"
#include "support.hpp"

namespace hirl {
namespace {

namespace fs = std::filesystem;

class DataFiles : public ::testing::Test {
 protected:
  fs::path dir;
  ModelConfig config;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() /
          ("hirl_dataio_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  void write(const fs::path& p, const std::string& text) const { std::ofstream(p) << text; }

  template <typename F>
  ErrorCode code_of(F&& f) const {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::kContract;
  }

  SyntheticData small_data() const {
    GeneratorConfig gen = GeneratorConfig::defaults();
    gen.train_scenes = 3;
    gen.test_scenes = 2;
    return generate_synthetic(gen, config);
  }
};

void expect_close(const Trajectory& a, const Trajectory& b, double tol) {
  ASSERT_EQ(a.length(), b.length());
  EXPECT_LT((a.coords() - b.coords()).cwiseAbs().maxCoeff(), tol);
}

TEST_F(DataFiles, SceneRecordsRoundTrip) {
  const SyntheticData data = small_data();
  std::vector<SceneRecord> recs;
  for (const SyntheticScene& s : data.train) recs.push_back(to_record(s));
  write_scene_records(dir / "train.csv", recs);
  ASSERT_TRUE(fs::exists(dir / "train.scenes.csv"));
  const std::vector<SceneRecord> back = read_scene_records(dir / "train.csv", config);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const SceneRecord& a = recs[i];
    const SceneRecord& b = back[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.scene.role, b.scene.role);
    EXPECT_EQ(a.decision, b.decision);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.scene.v_lim, b.scene.v_lim);
    expect_close(a.scene.hist_predicted, b.scene.hist_predicted, 1e-9);
    expect_close(a.scene.hist_host, b.scene.hist_host, 1e-9);
    ASSERT_EQ(a.scene.hist_surround.size(), b.scene.hist_surround.size());
    for (std::size_t k = 0; k < a.scene.hist_surround.size(); ++k)
      expect_close(a.scene.hist_surround[k], b.scene.hist_surround[k], 1e-9);
    expect_close(a.scene.host_future, b.scene.host_future, 1e-9);
    ASSERT_TRUE(b.future.has_value());
    expect_close(*a.future, *b.future, 1e-9);
  }
}

TEST_F(DataFiles, ConvertsToDemonstrationsAndTests) {
  const SyntheticData data = small_data();
  std::vector<SceneRecord> recs;
  for (const SyntheticScene& s : data.test) recs.push_back(to_record(s));
  write_scene_records(dir / "test.csv", recs);
  const std::vector<TestCase> tests = load_test_cases(dir / "test.csv", config);
  ASSERT_EQ(tests.size(), 2u);
  EXPECT_EQ(tests[0].labels, data.test[0].labelled.labels);
  EXPECT_EQ(tests[0].truth.decision, data.test[0].labelled.truth.decision);
  const std::vector<Demonstration> demos = load_demonstrations(dir / "test.csv", config);
  EXPECT_EQ(demos.size(), 2u);

  SceneRecord bare = recs[0];
  bare.future.reset();
  EXPECT_EQ(code_of([&] { to_demonstration(bare); }), ErrorCode::kData);
}

TEST_F(DataFiles, PartitionsByDecision) {
  std::mt19937_64 rng(1);
  const GeneratorConfig gen = GeneratorConfig::defaults();
  std::vector<SceneRecord> recs;
  for (Decision d : {Decision::kYield, Decision::kPass}) {
    const Scene s = random_scene(Role::kLaneKeeping, rng, gen, config);
    recs.push_back({"lk" + std::to_string(recs.size()), s,
                    extrapolate(s.hist_predicted, config.train_horizon), d, {}, {}, {}});
  }
  write_scene_records(dir / "two.csv", recs);
  const std::vector<Demonstration> demos = load_demonstrations(dir / "two.csv", config);
  const auto parts = partition_by_decision(demos);
  EXPECT_EQ(parts.at(Decision::kYield).size(), 1u);
  EXPECT_EQ(parts.at(Decision::kPass).size(), 1u);
}

TEST(Resample, HalvesFinerTrack) {
  std::vector<double> t;
  std::vector<Eigen::Vector2d> p;
  for (int i = 0; i < 41; ++i) {
    t.push_back(0.05 * i);
    p.emplace_back(3.0 + 1.1 * i, -0.2 * i * i);
  }
  const Trajectory r = resample(t, p, 0.1);
  ASSERT_EQ(r.length(), 21);
  for (int k = 0; k < 21; ++k) {
    EXPECT_EQ(r.x(k), p[2 * k].x());
    EXPECT_EQ(r.y(k), p[2 * k].y());
  }
}

TEST_F(DataFiles, FinerFileIsSubsampledExactly) {
  const SyntheticData data = small_data();
  const SceneRecord rec = to_record(data.train[0]);
  write_scene_records(dir / "coarse.csv", std::span(&rec, 1));
  const std::vector<SceneRecord> coarse = read_scene_records(dir / "coarse.csv", config);

  // Insert midpoints between consecutive rows of every vehicle.
  std::istringstream in(read_text_file(dir / "coarse.csv"));
  std::string header, line;
  std::getline(in, header);
  std::ostringstream out;
  out << header << "\n";
  std::vector<std::string> prev;
  auto fields = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    return f;
  };
  while (std::getline(in, line)) {
    const std::vector<std::string> f = fields(line);
    if (!prev.empty() && prev[1] == f[1]) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g\n", f[0].c_str(), f[1].c_str(),
                    0.5 * (std::stod(prev[2]) + std::stod(f[2])),
                    0.5 * (std::stod(prev[3]) + std::stod(f[3])),
                    0.5 * (std::stod(prev[4]) + std::stod(f[4])));
      out << buf;
    }
    out << line << "\n";
    prev = f;
  }
  write(dir / "fine.csv", out.str());
  fs::copy_file(dir / "coarse.scenes.csv", dir / "fine.scenes.csv");
  const std::vector<SceneRecord> fine = read_scene_records(dir / "fine.csv", config);
  ASSERT_EQ(fine.size(), 1u);
  expect_close(fine[0].scene.hist_predicted, coarse[0].scene.hist_predicted, 1e-9);
  expect_close(*fine[0].future, *coarse[0].future, 1e-9);
  expect_close(fine[0].scene.host_future, coarse[0].scene.host_future, 1e-9);
}

TEST_F(DataFiles, SchemaErrors) {
  write(dir / "a.scenes.csv",
        "scene_id,role,decision,v_lim,length,width,host_length,host_width,current_lane_y,"
        "target_lane_y,labels,w_c,w_d\n");
  write(dir / "a.csv", "scene,vehicle_role,t,x,y\n");
  EXPECT_EQ(code_of([&] { read_scene_records(dir / "a.csv", config); }), ErrorCode::kParse);

  write(dir / "a.csv", "scene_id,vehicle_role,t,x,y\ns,predicted,0,0,0\ns,predicted,0.1,abc,0\n");
  try {
    read_scene_records(dir / "a.csv", config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }

  write(dir / "a.csv", "scene_id,vehicle_role,t,x,y\ns,driver,0,0,0\n");
  EXPECT_EQ(code_of([&] { read_scene_records(dir / "a.csv", config); }), ErrorCode::kParse);

  EXPECT_EQ(code_of([&] { read_scene_records(dir / "missing.csv", config); }), ErrorCode::kIo);
}

TEST_F(DataFiles, NonUniformTimestampsAreDataErrors) {
  const SyntheticData data = small_data();
  const SceneRecord rec = to_record(data.train[0]);
  write_scene_records(dir / "b.csv", std::span(&rec, 1));
  std::string text = read_text_file(dir / "b.csv");
  // Nudge the third predicted timestamp.
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  int predicted = 0;
  while (std::getline(in, line)) {
    if (line.find(",predicted,") != std::string::npos && ++predicted == 3) {
      const auto a = line.find(",predicted,") + 11;
      const auto b = line.find(',', a);
      line = line.substr(0, a) + "0.23" + line.substr(b);
    }
    out << line << "\n";
  }
  write(dir / "b.csv", out.str());
  EXPECT_EQ(code_of([&] { read_scene_records(dir / "b.csv", config); }), ErrorCode::kData);
}

TEST_F(DataFiles, MissingSidecarRowIsDataError) {
  const SyntheticData data = small_data();
  const SceneRecord rec = to_record(data.train[0]);
  write_scene_records(dir / "c.csv", std::span(&rec, 1));
  write(dir / "c.scenes.csv",
        "scene_id,role,decision,v_lim,length,width,host_length,host_width,current_lane_y,"
        "target_lane_y,labels,w_c,w_d\n");
  EXPECT_EQ(code_of([&] { read_scene_records(dir / "c.csv", config); }), ErrorCode::kData);
}

TEST_F(DataFiles, HostPlansStartAtFirstSample) {
  const Scene s = test::merge_scene(config);
  SceneRecord rec{"p", s, std::nullopt, std::nullopt, {}, {}, {}};
  write_scene_records(dir / "plan.csv", std::span(&rec, 1));
  const auto plans = read_host_plans(dir / "plan.csv", config);
  ASSERT_EQ(plans.count("p"), 1u);
  EXPECT_EQ(plans.at("p").point(0), s.hist_host.point(0));
}

TEST(Split, SeededAndSized) {
  std::vector<SceneRecord> recs(10);
  for (int i = 0; i < 10; ++i) recs[i].id = std::to_string(i);
  const auto [a, b] = split_records(recs, 0.7, 3);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(b.size(), 3u);
  const auto [c, d] = split_records(recs, 0.7, 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, c[i].id);
  std::set<std::string> ids;
  for (const auto& r : a) ids.insert(r.id);
  for (const auto& r : b) ids.insert(r.id);
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_THROW(split_records(recs, 1.5, 3), Error);
}

// ---------------------------------------------------------------------------

class Params : public DataFiles {
 protected:
  ParameterSet params = ground_truth_params(GeneratorConfig::defaults());
};

TEST_F(Params, RoundTrip) {
  save_params(dir / "params.json", params, config);
  EXPECT_EQ(load_params(dir / "params.json", config), params);
  EXPECT_EQ(params_to_json(params_from_json(params_to_json(params, config), config), config),
            params_to_json(params, config));
}

TEST_F(Params, FingerprintMismatch) {
  const std::string text = params_to_json(params, config);
  ModelConfig other = config;
  other.dt = 0.05;
  try {
    params_from_json(text, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigMismatch);
    EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
  }
  ModelConfig horizon = config;
  horizon.decision_horizon = 20;
  EXPECT_EQ(code_of([&] { params_from_json(text, horizon); }), ErrorCode::kConfigMismatch);
}

TEST_F(Params, MalformedInput) {
  const std::string text = params_to_json(params, config);
  EXPECT_EQ(code_of([&] { params_from_json(text.substr(0, text.size() / 2), config); }),
            ErrorCode::kParse);
  nlohmann::json j = nlohmann::json::parse(text);
  j["continuous"]["MergeBack"]["theta"].push_back(1.0);
  EXPECT_EQ(code_of([&] { params_from_json(j.dump(), config); }), ErrorCode::kParse);
  nlohmann::json k = nlohmann::json::parse(text);
  std::swap(k["continuous"]["Yield"]["features"][0], k["continuous"]["Yield"]["features"][1]);
  EXPECT_EQ(code_of([&] { params_from_json(k.dump(), config); }), ErrorCode::kParse);
}

TEST(GeneratorConfigJson, RoundTripAndUnknownKeys) {
  GeneratorConfig g = GeneratorConfig::defaults();
  g.seed = 77;
  g.role = Role::kLaneKeeping;
  g.noise_model = NoiseModel::kIid;
  g.leader_gap = {20.0, 30.0};
  EXPECT_EQ(generator_config_from_json_string(to_json_string(g)), g);
  EXPECT_EQ(generator_config_from_json_string("{}"), GeneratorConfig::defaults());
  try {
    generator_config_from_json_string(R"({"seeds": 3})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(ModelConfigJson, RoundTrip) {
  ModelConfig c;
  c.decision_horizon = 25;
  c.idm.desired_speed = 27.0;
  EXPECT_EQ(model_config_from_json_string(to_json_string(c)), c);
  EXPECT_THROW(model_config_from_json_string(R"({"dtt": 0.1})"), Error);
}

TEST(PredictionOutput, JsonAndCsvShapes) {
  ModelConfig config;
  PredictOptions o;
  o.samples = 3;
  const PredictionMixture m =
      predict(test::merge_scene(config), ground_truth_params(GeneratorConfig::defaults()), config, o);
  const nlohmann::json j = nlohmann::json::parse(prediction_to_json(m));
  EXPECT_EQ(j.at("role"), "merging");
  ASSERT_EQ(j.at("decisions").size(), 2u);
  EXPECT_EQ(j.at("decisions")[0].at("samples").size(), 3u);
  const std::string csv = prediction_to_csv(m);
  EXPECT_EQ(csv.rfind("decision,kind,sample,weight,t,x,y\n", 0), 0u);
  // Header plus (1 + 3) trajectories of 30 points per decision.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4 * 30);
}

}  // namespace
}  // namespace hirl
