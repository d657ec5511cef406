// Writes the interaction-sensitivity benchmark: one merging scene, a
// gap-opening and a gap-closing host plan, and the generator's ground-truth
// parameters under the default model configuration.
#include <filesystem>
#include <iostream>
#include <string>

#include "hirl/dataio.hpp"
#include "hirl/generator.hpp"

using namespace hirl;

namespace {

Trajectory cruise_history(const Eigen::Vector2d& now, double v, int n, double dt) {
  Trajectory h = Trajectory::constant_velocity(now - Eigen::Vector2d((n - 1) * dt * v, 0.0),
                                               {v, 0.0}, n, dt);
  h.mutable_coords().tail<2>() = now;
  return h;
}

Trajectory host_plan(double v, double accel, int n, double dt) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n);
  for (int t = 0; t < n; ++t) {
    const double time = t * dt;
    c[2 * t] = v * time + 0.5 * accel * time * time;
  }
  return Trajectory(std::move(c), dt);
}

void write_plan(const std::filesystem::path& path, const std::string& id, const Trajectory& plan) {
  std::string text = std::string(kTrackHeader) + "\n";
  char buf[128];
  for (int t = 0; t < plan.length(); ++t) {
    std::snprintf(buf, sizeof buf, "%s,host,%.17g,%.17g,%.17g\n", id.c_str(), t * plan.dt(),
                  plan.x(t), plan.y(t));
    text += buf;
  }
  write_text_file_atomic(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data/benchmark";
  std::filesystem::create_directories(dir);
  const ModelConfig config;
  const GeneratorConfig gen = GeneratorConfig::defaults();
  const double dt = config.dt;
  const int hist = config.history_steps;
  const int plan = std::max(config.train_horizon, config.predict_horizon);
  const double speed = 20.0;
  const double accel = 2.0;

  SceneRecord rec;
  rec.id = "merge-pair";
  Scene& s = rec.scene;
  s.role = Role::kMerging;
  s.v_lim = gen.v_lim;
  s.dims = config.dims;
  s.host_dims = config.dims;
  s.lanes.current_lane_y = -config.lane_width;
  s.lanes.target_lane_y = 0.0;
  s.hist_predicted = cruise_history({3.0, -config.lane_width}, speed, hist, dt);
  s.hist_host = cruise_history({0.0, 0.0}, speed, hist, dt);
  s.hist_surround.push_back(cruise_history({40.0, 0.0}, speed, hist, dt));
  s.hist_surround.push_back(cruise_history({-35.0, 0.0}, speed, hist, dt));
  s.host_future = host_plan(speed, 0.0, plan, dt);
  validate(s);

  write_scene_records(dir / "scene.csv", std::span<const SceneRecord>(&rec, 1));
  write_plan(dir / "host_open.csv", rec.id, host_plan(speed, -accel, plan, dt));
  write_plan(dir / "host_close.csv", rec.id, host_plan(speed, accel, plan, dt));
  save_params(dir / "params.json", ground_truth_params(gen), config);
  std::cout << "wrote benchmark to " << dir.string() << "\n";
  return 0;
}
