#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <random>

#include "hirl/config.hpp"
#include "hirl/features.hpp"
#include "hirl/generator.hpp"
#include "hirl/scenario.hpp"
#include "hirl/trajectory.hpp"

namespace hirl::test {

inline Trajectory line(int n, const Eigen::Vector2d& start, const Eigen::Vector2d& velocity,
                       double dt = 0.1) {
  return Trajectory::constant_velocity(start, velocity, n, dt);
}

inline Trajectory from_function(int n, double dt, const std::function<Eigen::Vector2d(double)>& f) {
  Eigen::VectorXd c(2 * n);
  for (int t = 0; t < n; ++t) c.segment<2>(2 * t) = f(t * dt);
  return Trajectory(std::move(c), dt);
}

/// History of `n` samples at constant velocity ending exactly at `now`.
inline Trajectory history(const Eigen::Vector2d& now, const Eigen::Vector2d& v, int n,
                          double dt = 0.1) {
  Trajectory h = line(n, now - (n - 1) * dt * v, v, dt);
  h.mutable_coords().tail<2>() = now;
  return h;
}

/// Merging scene: predicted vehicle on the ramp at `x_merge`, host in the main
/// lane at the origin, both cruising at `speed`; host plan accelerates at
/// `host_accel`. Surroundings are optional.
inline Scene merge_scene(const ModelConfig& config, double x_merge = 3.0, double speed = 20.0,
                         double host_accel = 0.0, bool surroundings = true) {
  const double dt = config.dt;
  const int hist = config.history_steps;
  const int plan = std::max(config.train_horizon, config.predict_horizon);
  Scene s;
  s.role = Role::kMerging;
  s.v_lim = 25.0;
  s.dims = config.dims;
  s.host_dims = config.dims;
  s.lanes.current_lane_y = -config.lane_width;
  s.lanes.target_lane_y = 0.0;
  s.hist_predicted = history({x_merge, -config.lane_width}, {speed, 0.0}, hist, dt);
  s.hist_host = history({0.0, 0.0}, {speed, 0.0}, hist, dt);
  if (surroundings) {
    s.hist_surround.push_back(history({40.0, 0.0}, {speed, 0.0}, hist, dt));
    s.hist_surround.push_back(history({-35.0, 0.0}, {speed, 0.0}, hist, dt));
  }
  s.host_future = from_function(plan, dt, [&](double t) {
    return Eigen::Vector2d(speed * t + 0.5 * host_accel * t * t, 0.0);
  });
  return s;
}

inline std::vector<Scene> random_scenes(Role role, int count, std::uint64_t seed,
                                        const ModelConfig& config) {
  std::mt19937_64 rng(seed);
  const GeneratorConfig gen = GeneratorConfig::defaults();
  std::vector<Scene> out;
  for (int i = 0; i < count; ++i) out.push_back(random_scene(role, rng, gen, config));
  return out;
}

/// Random trajectory near the constant-velocity continuation of the scene.
inline Trajectory random_near(const Scene& scene, int n, double sigma, std::mt19937_64& rng) {
  Trajectory t = extrapolate(scene.hist_predicted, n);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = 0; i < t.mutable_coords().size(); ++i) t.mutable_coords()[i] += noise(rng);
  return t;
}

inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double up = f(y);
    y[i] = x[i] - h;
    const double down = f(y);
    y[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::max(b.cwiseAbs().maxCoeff(), 1e-12);
  return (a - b).cwiseAbs().maxCoeff() / denom;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace hirl::test
