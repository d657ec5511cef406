#include "hirl/config.hpp"

#include <cmath>
#include <set>

#include "hirl/error.hpp"
#include "json.hpp"

namespace hirl {

using nlohmann::json;

void validate(const ModelConfig& c) {
  auto positive = [](double v, const char* name) {
    require(std::isfinite(v) && v > 0.0, ErrorCode::kValidation,
            std::string(name) + " must be positive");
  };
  positive(c.dt, "dt");
  positive(c.goal_offset, "goal_offset");
  positive(c.lane_width, "lane_width");
  positive(c.courtesy_sharpness, "courtesy_sharpness");
  positive(c.theta_min, "theta_min");
  positive(c.hessian_floor, "hessian_floor");
  positive(c.sample_sigma, "sample_sigma");
  positive(c.idm.time_headway, "idm.time_headway");
  positive(c.idm.max_acceleration, "idm.max_acceleration");
  positive(c.idm.comfortable_deceleration, "idm.comfortable_deceleration");
  positive(c.dims.length, "dims.length");
  positive(c.dims.width, "dims.width");
  positive(c.optimizer.mpc_step_tolerance, "optimizer.mpc_step_tolerance");
  positive(c.optimizer.irl_objective_tolerance, "optimizer.irl_objective_tolerance");
  positive(c.optimizer.discrete_step, "optimizer.discrete_step");
  positive(c.optimizer.discrete_gradient_tolerance, "optimizer.discrete_gradient_tolerance");
  require(c.idm.jam_distance >= 0.0, ErrorCode::kValidation, "idm.jam_distance must be >= 0");
  if (c.idm.desired_speed) positive(*c.idm.desired_speed, "idm.desired_speed");
  require(c.history_steps >= 2, ErrorCode::kValidation, "history_steps must be >= 2");
  for (int h : {c.train_horizon, c.predict_horizon, c.decision_horizon})
    require(h >= 3, ErrorCode::kValidation, "horizons must be >= 3");
  require(c.samples_per_decision >= 1, ErrorCode::kValidation,
          "samples_per_decision must be >= 1");
  require(c.optimizer.mpc_max_iterations >= 1 && c.optimizer.irl_max_iterations >= 1 &&
              c.optimizer.irl_restarts >= 1 && c.optimizer.discrete_max_iterations >= 1,
          ErrorCode::kValidation, "iteration limits must be >= 1");
}

namespace {

json to_json(const ModelConfig& c) {
  json idm = {{"time_headway", c.idm.time_headway},
              {"max_acceleration", c.idm.max_acceleration},
              {"comfortable_deceleration", c.idm.comfortable_deceleration},
              {"jam_distance", c.idm.jam_distance}};
  idm["desired_speed"] = c.idm.desired_speed ? json(*c.idm.desired_speed) : json(nullptr);
  const OptimizerConfig& o = c.optimizer;
  return {{"dt", c.dt},
          {"history_steps", c.history_steps},
          {"train_horizon", c.train_horizon},
          {"predict_horizon", c.predict_horizon},
          {"decision_horizon", c.decision_horizon},
          {"goal_offset", c.goal_offset},
          {"lane_width", c.lane_width},
          {"courtesy_sharpness", c.courtesy_sharpness},
          {"theta_min", c.theta_min},
          {"hessian_floor", c.hessian_floor},
          {"samples_per_decision", c.samples_per_decision},
          {"sample_sigma", c.sample_sigma},
          {"idm", idm},
          {"dims", {{"length", c.dims.length}, {"width", c.dims.width}}},
          {"optimizer",
           {{"mpc_max_iterations", o.mpc_max_iterations},
            {"mpc_step_tolerance", o.mpc_step_tolerance},
            {"irl_max_iterations", o.irl_max_iterations},
            {"irl_objective_tolerance", o.irl_objective_tolerance},
            {"irl_restarts", o.irl_restarts},
            {"discrete_max_iterations", o.discrete_max_iterations},
            {"discrete_step", o.discrete_step},
            {"discrete_gradient_tolerance", o.discrete_gradient_tolerance}}}};
}

// Reads keys present in `j` into fields of a default-constructed object;
// anything not listed is an error.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorCode::kParse, path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, path_ + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      require(seen_.count(it.key()) > 0, ErrorCode::kParse,
              "unknown configuration key '" + path_ + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

std::string to_json_string(const ModelConfig& config) { return to_json(config).dump(2); }

ModelConfig model_config_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("configuration is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  Reader r(j, "");
  r.get("dt", c.dt);
  r.get("history_steps", c.history_steps);
  r.get("train_horizon", c.train_horizon);
  r.get("predict_horizon", c.predict_horizon);
  r.get("decision_horizon", c.decision_horizon);
  r.get("goal_offset", c.goal_offset);
  r.get("lane_width", c.lane_width);
  r.get("courtesy_sharpness", c.courtesy_sharpness);
  r.get("theta_min", c.theta_min);
  r.get("hessian_floor", c.hessian_floor);
  r.get("samples_per_decision", c.samples_per_decision);
  r.get("sample_sigma", c.sample_sigma);
  if (const json* idm = r.sub("idm")) {
    Reader ri(*idm, "idm.");
    ri.get("time_headway", c.idm.time_headway);
    ri.get("max_acceleration", c.idm.max_acceleration);
    ri.get("comfortable_deceleration", c.idm.comfortable_deceleration);
    ri.get("jam_distance", c.idm.jam_distance);
    if (const json* v0 = ri.sub("desired_speed"); v0 && !v0->is_null()) {
      require(v0->is_number(), ErrorCode::kParse, "idm.desired_speed must be a number or null");
      c.idm.desired_speed = v0->get<double>();
    }
    ri.finish();
  }
  if (const json* dims = r.sub("dims")) {
    Reader rd(*dims, "dims.");
    rd.get("length", c.dims.length);
    rd.get("width", c.dims.width);
    rd.finish();
  }
  if (const json* opt = r.sub("optimizer")) {
    OptimizerConfig& o = c.optimizer;
    Reader ro(*opt, "optimizer.");
    ro.get("mpc_max_iterations", o.mpc_max_iterations);
    ro.get("mpc_step_tolerance", o.mpc_step_tolerance);
    ro.get("irl_max_iterations", o.irl_max_iterations);
    ro.get("irl_objective_tolerance", o.irl_objective_tolerance);
    ro.get("irl_restarts", o.irl_restarts);
    ro.get("discrete_max_iterations", o.discrete_max_iterations);
    ro.get("discrete_step", o.discrete_step);
    ro.get("discrete_gradient_tolerance", o.discrete_gradient_tolerance);
    ro.finish();
  }
  r.finish();
  validate(c);
  return c;
}

}  // namespace hirl
