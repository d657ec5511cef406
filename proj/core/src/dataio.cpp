#include "hirl/dataio.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hirl/error.hpp"
#include "json.hpp"

namespace hirl {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), ErrorCode::kIo, "error reading " + path.string());
  return ss.str();
}

void write_text_file_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    out.flush();
    require(out.good(), ErrorCode::kIo, "error writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot move " + tmp.string() + " to " + path.string());
  }
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  require(!text.empty(), ErrorCode::kParse, where + ": empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  require(end == text.c_str() + text.size() && errno == 0 && std::isfinite(v),
          ErrorCode::kParse, where + ": '" + text + "' is not a finite number");
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

struct Sample {
  double t;
  Eigen::Vector2d p;
};

struct Track {
  std::vector<Sample> samples;

  double start() const { return samples.front().t; }
  double end() const { return samples.back().t; }
  double spacing() const { return samples[1].t - samples[0].t; }

  // Linear interpolation; exact sample when t falls on one.
  Eigen::Vector2d at(double t) const {
    const double pos = (t - start()) / spacing();
    const double nearest = std::round(pos);
    const auto last = static_cast<double>(samples.size() - 1);
    if (std::abs(pos - nearest) <= 1e-9 && nearest >= 0.0 && nearest <= last)
      return samples[static_cast<std::size_t>(nearest)].p;
    const auto i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, last - 1.0));
    const double u = pos - static_cast<double>(i);
    return (1.0 - u) * samples[i].p + u * samples[i + 1].p;
  }
  bool covers(double t) const { return t >= start() - 1e-9 && t <= end() + 1e-9; }
};

void check_uniform(const Track& track, const std::string& where) {
  require(track.samples.size() >= 2, ErrorCode::kData, where + ": needs at least two samples");
  const double dt = track.spacing();
  require(dt > 0.0, ErrorCode::kData, where + ": timestamps must be strictly increasing");
  for (std::size_t i = 1; i < track.samples.size(); ++i) {
    const double step = track.samples[i].t - track.samples[i - 1].t;
    require(step > 0.0, ErrorCode::kData, where + ": timestamps must be strictly increasing");
    require(std::abs(step - dt) <= 1e-6, ErrorCode::kData,
            where + ": non-uniform timestamps at sample " + std::to_string(i));
  }
}

Trajectory sample_track(const Track& track, double t0, int n, double dt, const std::string& where) {
  Eigen::VectorXd coords(2 * n);
  for (int k = 0; k < n; ++k) {
    const double t = t0 + k * dt;
    require(track.covers(t), ErrorCode::kData,
            where + ": no data at t=" + format_double(t));
    coords.segment<2>(2 * k) = track.at(t);
  }
  return Trajectory(std::move(coords), dt);
}

int samples_from(const Track& track, double t0, double dt) {
  return static_cast<int>(std::floor((track.end() - t0) / dt + 1e-9)) + 1;
}

struct SidecarRow {
  Role role = Role::kMerging;
  std::optional<Decision> decision;
  double v_lim = 0.0;
  VehicleDims dims;
  VehicleDims host_dims;
  double current_lane_y = 0.0;
  double target_lane_y = 0.0;
  std::vector<PatternLabel> labels;
  std::vector<double> w_c;
  std::vector<double> w_d;
};

std::map<std::string, SidecarRow> read_sidecar(const fs::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  require(!lines.empty() && lines[0] == kSidecarHeader, ErrorCode::kParse,
          path.string() + ": header must be '" + std::string(kSidecarHeader) + "'");
  std::map<std::string, SidecarRow> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    const std::vector<std::string> f = split(lines[r], ',');
    require(f.size() == 13, ErrorCode::kParse, where + ": expected 13 fields");
    SidecarRow row;
    try {
      row.role = role_from_string(f[1]);
      if (!f[2].empty()) row.decision = decision_from_string(f[2]);
    } catch (const Error& e) {
      fail(ErrorCode::kParse, where + ": " + e.what());
    }
    row.v_lim = parse_double(f[3], where);
    row.dims = {parse_double(f[4], where), parse_double(f[5], where)};
    row.host_dims = {parse_double(f[6], where), parse_double(f[7], where)};
    row.current_lane_y = parse_double(f[8], where);
    row.target_lane_y = parse_double(f[9], where);
    if (!f[10].empty())
      for (const std::string& l : split(f[10], ';')) {
        try {
          row.labels.push_back(pattern_label_from_string(l));
        } catch (const Error& e) {
          fail(ErrorCode::kParse, where + ": " + e.what());
        }
      }
    if (!f[11].empty())
      for (const std::string& w : split(f[11], ';')) row.w_c.push_back(parse_double(w, where));
    if (!f[12].empty())
      for (const std::string& w : split(f[12], ';')) row.w_d.push_back(parse_double(w, where));
    require(rows.emplace(f[0], std::move(row)).second, ErrorCode::kParse,
            where + ": duplicate scene '" + f[0] + "'");
  }
  return rows;
}

struct TrackTable {
  std::vector<std::string> order;                              // scene ids, first appearance
  std::map<std::string, std::map<std::string, Track>> tracks;  // scene -> role -> track
};

TrackTable read_tracks(const fs::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  require(!lines.empty() && lines[0] == kTrackHeader, ErrorCode::kParse,
          path.string() + ": header must be '" + std::string(kTrackHeader) + "'");
  TrackTable table;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    const std::vector<std::string> f = split(lines[r], ',');
    require(f.size() == 5, ErrorCode::kParse, where + ": expected 5 fields");
    require(!f[0].empty(), ErrorCode::kParse, where + ": empty scene_id");
    const std::string& role = f[1];
    const bool known = role == "predicted" || role == "host" ||
                       (role.rfind("surround_", 0) == 0 && role.size() > 9 &&
                        role.find_first_not_of("0123456789", 9) == std::string::npos);
    require(known, ErrorCode::kParse, where + ": unknown vehicle_role '" + role + "'");
    if (!table.tracks.count(f[0])) table.order.push_back(f[0]);
    table.tracks[f[0]][role].samples.push_back(
        {parse_double(f[2], where), {parse_double(f[3], where), parse_double(f[4], where)}});
  }
  return table;
}

std::vector<std::string> surround_roles(const std::map<std::string, Track>& tracks) {
  std::vector<std::pair<int, std::string>> found;
  for (const auto& [role, _] : tracks)
    if (role.rfind("surround_", 0) == 0) found.emplace_back(std::stoi(role.substr(9)), role);
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [_, r] : found) out.push_back(r);
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

fs::path sidecar_path(const fs::path& tracks) {
  fs::path p = tracks;
  p.replace_extension();
  p += ".scenes.csv";
  return p;
}

Trajectory resample(std::span<const double> times, std::span<const Eigen::Vector2d> points,
                    double dt) {
  require(times.size() == points.size(), ErrorCode::kContract, "times/points size mismatch");
  Track track;
  for (std::size_t i = 0; i < times.size(); ++i) track.samples.push_back({times[i], points[i]});
  check_uniform(track, "track");
  const int n = samples_from(track, track.start(), dt);
  return sample_track(track, track.start(), n, dt, "track");
}

std::vector<SceneRecord> read_scene_records(const fs::path& tracks_path,
                                            const ModelConfig& config) {
  const TrackTable table = read_tracks(tracks_path);
  const fs::path side = sidecar_path(tracks_path);
  const std::map<std::string, SidecarRow> sidecar = read_sidecar(side);
  const double dt = config.dt;
  const int hist = config.history_steps;

  std::vector<SceneRecord> out;
  for (const std::string& id : table.order) {
    const std::map<std::string, Track>& roles = table.tracks.at(id);
    const std::string where = "scene '" + id + "'";
    auto sc = sidecar.find(id);
    require(sc != sidecar.end(), ErrorCode::kData, where + " has no row in " + side.string());
    require(roles.count("predicted") && roles.count("host"), ErrorCode::kData,
            where + " needs exactly one predicted and one host track");
    for (const auto& [role, track] : roles) check_uniform(track, where + " " + role);

    const Track& pred = roles.at("predicted");
    const Track& host = roles.at("host");
    const double t0 = pred.start();
    const int pred_n = samples_from(pred, t0, dt);
    require(pred_n >= hist, ErrorCode::kData,
            where + ": predicted track shorter than " + std::to_string(hist) + " history steps");
    const double now = t0 + (hist - 1) * dt;

    const SidecarRow& row = sc->second;
    SceneRecord rec;
    rec.id = id;
    Scene& s = rec.scene;
    s.role = row.role;
    s.v_lim = row.v_lim;
    s.dims = row.dims;
    s.host_dims = row.host_dims;
    s.lanes.current_lane_y = row.current_lane_y;
    s.lanes.target_lane_y = row.target_lane_y;
    s.hist_predicted = sample_track(pred, t0, hist, dt, where + " predicted");
    s.hist_host = sample_track(host, t0, hist, dt, where + " host");
    for (const std::string& r : surround_roles(roles))
      s.hist_surround.push_back(sample_track(roles.at(r), t0, hist, dt, where + " " + r));

    const int plan_n = samples_from(host, now, dt);
    if (plan_n >= Trajectory::kMinLength) {
      s.host_future = sample_track(host, now, plan_n, dt, where + " host");
    } else {
      // No plan in the file: hold the host's current velocity.
      s.host_future = extrapolate(s.hist_host, std::max(config.train_horizon, config.predict_horizon));
    }
    const int future_n = pred_n - hist + 1;
    if (future_n >= Trajectory::kMinLength)
      rec.future = sample_track(pred, now, future_n, dt, where + " predicted");

    if (row.decision) {
      require(role_of(*row.decision) == row.role, ErrorCode::kData,
              where + ": decision " + std::string(to_string(*row.decision)) +
                  " does not belong to role " + std::string(to_string(row.role)));
    }
    rec.decision = row.decision;
    rec.labels = row.labels;
    rec.w_c = row.w_c;
    rec.w_d = row.w_d;
    try {
      validate(s);
    } catch (const Error& e) {
      fail(ErrorCode::kData, where + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_scene_records(const fs::path& tracks_path, std::span<const SceneRecord> records) {
  std::string tracks = std::string(kTrackHeader) + "\n";
  std::string side = std::string(kSidecarHeader) + "\n";
  for (const SceneRecord& rec : records) {
    const Scene& s = rec.scene;
    const double dt = s.dt();
    const int hist = s.hist_predicted.length();
    auto emit = [&](const std::string& role, const Trajectory& history,
                    const Trajectory* future) {
      int k = 0;
      auto row = [&](const Eigen::Vector2d& p) {
        tracks += rec.id + "," + role + "," + format_double(k * dt) + "," + format_double(p.x()) +
                  "," + format_double(p.y()) + "\n";
        ++k;
      };
      for (int t = 0; t < history.length(); ++t) row(history.point(t));
      if (future) {
        require((future->point(0) - history.point(history.length() - 1)).norm() <= 1e-9,
                ErrorCode::kContract,
                "scene '" + rec.id + "' " + role + ": future must start at the current sample");
        for (int t = 1; t < future->length(); ++t) row(future->point(t));
      }
    };
    emit("predicted", s.hist_predicted, rec.future ? &*rec.future : nullptr);
    emit("host", s.hist_host, &s.host_future);
    for (std::size_t k = 0; k < s.hist_surround.size(); ++k)
      emit("surround_" + std::to_string(k), s.hist_surround[k], nullptr);
    require(hist == s.hist_host.length(), ErrorCode::kContract, "history length mismatch");

    std::vector<std::string> labels, wc, wd;
    for (PatternLabel l : rec.labels) labels.emplace_back(to_string(l));
    for (double w : rec.w_c) wc.push_back(format_double(w));
    for (double w : rec.w_d) wd.push_back(format_double(w));
    side += rec.id + "," + std::string(to_string(s.role)) + "," +
            (rec.decision ? std::string(to_string(*rec.decision)) : std::string()) + "," +
            format_double(s.v_lim) + "," + format_double(s.dims.length) + "," +
            format_double(s.dims.width) + "," + format_double(s.host_dims.length) + "," +
            format_double(s.host_dims.width) + "," + format_double(s.lanes.current_lane_y) + "," +
            format_double(s.lanes.target_lane_y) + "," + join(labels, ';') + "," + join(wc, ';') +
            "," + join(wd, ';') + "\n";
  }
  write_text_file_atomic(tracks_path, tracks);
  write_text_file_atomic(sidecar_path(tracks_path), side);
}

SceneRecord to_record(const TestCase& test) {
  SceneRecord r;
  r.id = test.id;
  r.scene = test.truth.scene;
  r.future = test.truth.future;
  r.decision = test.truth.decision;
  r.labels = test.labels;
  r.w_c = test.w_c;
  r.w_d = test.w_d;
  return r;
}

SceneRecord to_record(const SyntheticScene& scene) { return to_record(scene.labelled); }

Demonstration to_demonstration(const SceneRecord& record) {
  require(record.future.has_value(), ErrorCode::kData,
          "scene '" + record.id + "' has no predicted future");
  require(record.decision.has_value(), ErrorCode::kData,
          "scene '" + record.id + "' has no decision label");
  Demonstration d{*record.future, *record.decision, record.scene};
  validate(d);
  return d;
}

TestCase to_test_case(const SceneRecord& record) {
  TestCase t;
  t.id = record.id;
  t.truth = to_demonstration(record);
  require(record.labels.size() == 2, ErrorCode::kData,
          "scene '" + record.id + "' needs one pattern label per decision");
  t.labels = record.labels;
  t.w_c = record.w_c;
  t.w_d = record.w_d;
  return t;
}

std::vector<Demonstration> load_demonstrations(const fs::path& tracks, const ModelConfig& config) {
  std::vector<Demonstration> out;
  for (const SceneRecord& r : read_scene_records(tracks, config)) out.push_back(to_demonstration(r));
  return out;
}

std::vector<TestCase> load_test_cases(const fs::path& tracks, const ModelConfig& config) {
  std::vector<TestCase> out;
  for (const SceneRecord& r : read_scene_records(tracks, config)) out.push_back(to_test_case(r));
  return out;
}

std::map<Decision, std::vector<Demonstration>> partition_by_decision(
    std::span<const Demonstration> demos) {
  std::map<Decision, std::vector<Demonstration>> out;
  for (const Demonstration& d : demos) out[d.decision].push_back(d);
  return out;
}

std::map<std::string, Trajectory> read_host_plans(const fs::path& tracks,
                                                  const ModelConfig& config) {
  const TrackTable table = read_tracks(tracks);
  std::map<std::string, Trajectory> out;
  for (const std::string& id : table.order) {
    auto it = table.tracks.at(id).find("host");
    if (it == table.tracks.at(id).end()) continue;
    const Track& host = it->second;
    check_uniform(host, "scene '" + id + "' host");
    const int n = samples_from(host, host.start(), config.dt);
    out.emplace(id, sample_track(host, host.start(), n, config.dt, "scene '" + id + "' host"));
  }
  require(!out.empty(), ErrorCode::kData, tracks.string() + " contains no host rows");
  return out;
}

std::pair<std::vector<SceneRecord>, std::vector<SceneRecord>> split_records(
    std::vector<SceneRecord> records, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::kValidation,
          "split fraction must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates; std::shuffle's draw pattern is unspecified.
  for (std::size_t i = records.size(); i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(records[i - 1], records[j]);
  }
  const auto cut = static_cast<std::size_t>(std::lround(fraction * records.size()));
  std::vector<SceneRecord> first(std::make_move_iterator(records.begin()),
                                 std::make_move_iterator(records.begin() + cut));
  std::vector<SceneRecord> second(std::make_move_iterator(records.begin() + cut),
                                  std::make_move_iterator(records.end()));
  return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Parameter files

namespace {

ojson fingerprint(const ModelConfig& c) {
  ojson idm = {{"time_headway", c.idm.time_headway},
               {"max_acceleration", c.idm.max_acceleration},
               {"comfortable_deceleration", c.idm.comfortable_deceleration},
               {"jam_distance", c.idm.jam_distance}};
  idm["desired_speed"] = c.idm.desired_speed ? ojson(*c.idm.desired_speed) : ojson(nullptr);
  return {{"dt", c.dt},
          {"history_steps", c.history_steps},
          {"train_horizon", c.train_horizon},
          {"predict_horizon", c.predict_horizon},
          {"decision_horizon", c.decision_horizon},
          {"goal_offset", c.goal_offset},
          {"lane_width", c.lane_width},
          {"courtesy_sharpness", c.courtesy_sharpness},
          {"idm", idm},
          {"dims", {{"length", c.dims.length}, {"width", c.dims.width}}}};
}

void diff_fingerprint(const ojson& stored, const ojson& expected, const std::string& prefix,
                      std::vector<std::string>& out) {
  for (auto it = expected.begin(); it != expected.end(); ++it) {
    const std::string key = prefix + it.key();
    if (!stored.contains(it.key())) {
      out.push_back(key + " (missing)");
    } else if (it->is_object()) {
      diff_fingerprint(stored.at(it.key()), *it, key + ".", out);
    } else if (stored.at(it.key()) != *it) {
      out.push_back(key + " (file " + stored.at(it.key()).dump() + ", config " + it->dump() + ")");
    }
  }
}

ojson vector_json(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vector(const ojson& j, const std::string& where) {
  require(j.is_array(), ErrorCode::kParse, where + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), ErrorCode::kParse, where + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::Vector2d json_vector2(const ojson& j, const std::string& where) {
  const Eigen::VectorXd v = json_vector(j, where);
  require(v.size() == 2, ErrorCode::kParse, where + " must have two entries");
  return {v[0], v[1]};
}

}  // namespace

std::string params_to_json(const ParameterSet& params, const ModelConfig& config) {
  ojson j;
  j["format_version"] = kParamFormatVersion;
  j["fingerprint"] = fingerprint(config);
  ojson cont = ojson::object();
  for (const auto& [d, p] : params.continuous) {
    require(p.features == feature_set_for(d), ErrorCode::kContract,
            "parameter file needs the standard feature order for " + std::string(to_string(d)));
    ojson names = ojson::array();
    for (FeatureId f : p.features) names.push_back(std::string(to_string(f)));
    cont[std::string(to_string(d))] = {{"features", names}, {"theta", vector_json(p.theta)}};
  }
  j["continuous"] = cont;
  ojson disc = ojson::object();
  for (const auto& [role, p] : params.discrete) {
    disc[std::string(to_string(role))] = {{"psi", vector_json(p.psi)},
                                          {"mean", vector_json(p.mean)},
                                          {"scale", vector_json(p.scale)}};
  }
  j["discrete"] = disc;
  return j.dump(2) + "\n";
}

ParameterSet params_from_json(const std::string& text, const ModelConfig& config) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorCode::kParse, std::string("parameter file is not valid JSON: ") + e.what());
  }
  require(j.is_object() && j.contains("format_version") && j.contains("fingerprint") &&
              j.contains("continuous") && j.contains("discrete"),
          ErrorCode::kParse, "parameter file lacks required sections");
  require(j["format_version"] == kParamFormatVersion, ErrorCode::kParse,
          "unsupported parameter format version " + j["format_version"].dump());
  std::vector<std::string> diffs;
  diff_fingerprint(j["fingerprint"], fingerprint(config), "", diffs);
  std::string msg;
  for (const std::string& d : diffs) msg += (msg.empty() ? "" : ", ") + d;
  require(diffs.empty(), ErrorCode::kConfigMismatch,
          "parameter file was trained with a different configuration: " + msg);

  ParameterSet out;
  try {
    for (auto it = j["continuous"].begin(); it != j["continuous"].end(); ++it) {
      const Decision d = decision_from_string(it.key());
      const ojson& entry = it.value();
      require(entry.contains("features") && entry.contains("theta"), ErrorCode::kParse,
              "continuous." + it.key() + " needs features and theta");
      std::vector<FeatureId> features;
      for (const ojson& f : entry["features"]) features.push_back(feature_from_string(f.get<std::string>()));
      require(features == feature_set_for(d), ErrorCode::kParse,
              "continuous." + it.key() + ": feature order differs from the decision's feature set");
      Eigen::VectorXd theta = json_vector(entry["theta"], "continuous." + it.key() + ".theta");
      out.continuous.emplace(d, ContinuousParams::for_decision(d, std::move(theta)));
    }
    for (auto it = j["discrete"].begin(); it != j["discrete"].end(); ++it) {
      DiscreteParams p;
      p.role = role_from_string(it.key());
      const ojson& entry = it.value();
      require(entry.contains("psi") && entry.contains("mean") && entry.contains("scale"),
              ErrorCode::kParse, "discrete." + it.key() + " needs psi, mean and scale");
      p.psi = json_vector2(entry["psi"], "discrete." + it.key() + ".psi");
      p.mean = json_vector2(entry["mean"], "discrete." + it.key() + ".mean");
      p.scale = json_vector2(entry["scale"], "discrete." + it.key() + ".scale");
      out.discrete.emplace(p.role, p);
    }
  } catch (const ojson::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed parameter file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    fail(ErrorCode::kParse, std::string("malformed parameter file: ") + e.what());
  }
  return out;
}

void save_params(const fs::path& path, const ParameterSet& params, const ModelConfig& config) {
  write_text_file_atomic(path, params_to_json(params, config));
}

ParameterSet load_params(const fs::path& path, const ModelConfig& config) {
  return params_from_json(read_text_file(path), config);
}

// ---------------------------------------------------------------------------
// Generator configuration

namespace {

ojson range_json(const Range& r) { return ojson::array({r.lo, r.hi}); }

}  // namespace

std::string to_json_string(const GeneratorConfig& g) {
  ojson j;
  j["seed"] = g.seed;
  j["train_scenes"] = g.train_scenes;
  j["test_scenes"] = g.test_scenes;
  j["role"] = g.role ? ojson(std::string(to_string(*g.role))) : ojson(nullptr);
  j["noise_std"] = g.noise_std;
  j["noise_model"] = std::string(to_string(g.noise_model));
  ojson theta = ojson::object();
  for (const auto& [d, t] : g.theta) theta[std::string(to_string(d))] = vector_json(t);
  j["theta"] = theta;
  ojson psi = ojson::object();
  for (const auto& [r, p] : g.psi) psi[std::string(to_string(r))] = vector_json(p);
  j["psi"] = psi;
  j["v_lim"] = g.v_lim;
  j["host_speed"] = range_json(g.host_speed);
  j["relative_speed"] = range_json(g.relative_speed);
  j["relative_position"] = range_json(g.relative_position);
  j["leader_gap"] = range_json(g.leader_gap);
  j["follower_gap"] = range_json(g.follower_gap);
  j["neighbour_speed"] = range_json(g.neighbour_speed);
  j["host_plan_accel"] = range_json(g.host_plan_accel);
  j["merge_duration"] = range_json(g.merge_duration);
  j["aggressive_gap"] = g.aggressive_gap;
  j["max_retries"] = g.max_retries;
  return j.dump(2) + "\n";
}

GeneratorConfig generator_config_from_json_string(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorCode::kParse, std::string("generator configuration is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::kParse, "generator configuration must be an object");
  GeneratorConfig g = GeneratorConfig::defaults();
  auto range = [&](const char* key, Range& r) {
    if (!j.contains(key)) return;
    const Eigen::Vector2d v = json_vector2(j[key], key);
    require(v[0] <= v[1], ErrorCode::kValidation, std::string(key) + ": lower bound above upper");
    r = {v[0], v[1]};
  };
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      static const char* known[] = {"seed", "train_scenes", "test_scenes", "role", "noise_std",
                                    "noise_model", "theta", "psi", "v_lim", "host_speed",
                                    "relative_speed", "relative_position", "leader_gap",
                                    "follower_gap", "neighbour_speed", "host_plan_accel",
                                    "merge_duration", "aggressive_gap", "max_retries"};
      require(std::find_if(std::begin(known), std::end(known),
                           [&](const char* k) { return it.key() == k; }) != std::end(known),
              ErrorCode::kParse, "unknown generator key '" + it.key() + "'");
    }
    if (j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("train_scenes")) g.train_scenes = j["train_scenes"].get<int>();
    if (j.contains("test_scenes")) g.test_scenes = j["test_scenes"].get<int>();
    if (j.contains("role") && !j["role"].is_null())
      g.role = role_from_string(j["role"].get<std::string>());
    if (j.contains("noise_std")) g.noise_std = j["noise_std"].get<double>();
    if (j.contains("noise_model"))
      g.noise_model = noise_model_from_string(j["noise_model"].get<std::string>());
    if (j.contains("theta")) {
      for (auto it = j["theta"].begin(); it != j["theta"].end(); ++it) {
        const Decision d = decision_from_string(it.key());
        Eigen::VectorXd t = json_vector(it.value(), "theta." + it.key());
        require(t.size() == static_cast<Eigen::Index>(feature_set_for(d).size()),
                ErrorCode::kValidation, "theta." + it.key() + " has the wrong dimension");
        g.theta[d] = std::move(t);
      }
    }
    if (j.contains("psi")) {
      for (auto it = j["psi"].begin(); it != j["psi"].end(); ++it)
        g.psi[role_from_string(it.key())] = json_vector2(it.value(), "psi." + it.key());
    }
    if (j.contains("v_lim")) g.v_lim = j["v_lim"].get<double>();
    range("host_speed", g.host_speed);
    range("relative_speed", g.relative_speed);
    range("relative_position", g.relative_position);
    range("leader_gap", g.leader_gap);
    range("follower_gap", g.follower_gap);
    range("neighbour_speed", g.neighbour_speed);
    range("host_plan_accel", g.host_plan_accel);
    range("merge_duration", g.merge_duration);
    if (j.contains("aggressive_gap")) g.aggressive_gap = j["aggressive_gap"].get<double>();
    if (j.contains("max_retries")) g.max_retries = j["max_retries"].get<int>();
  } catch (const ojson::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed generator configuration: ") + e.what());
  }
  require(g.train_scenes > 0 && g.test_scenes > 0, ErrorCode::kValidation,
          "scene counts must be positive");
  require(g.noise_std >= 0.0, ErrorCode::kValidation, "noise_std must be non-negative");
  for (const auto& [d, t] : g.theta)
    require((t.array() > 0.0).all() && t.allFinite(), ErrorCode::kValidation,
            "theta." + std::string(to_string(d)) + " must be positive");
  return g;
}

// ---------------------------------------------------------------------------
// Prediction output

std::string prediction_to_json(const PredictionMixture& m) {
  ojson j;
  j["role"] = std::string(to_string(m.role));
  j["horizon"] = m.horizon;
  j["dt"] = m.dt;
  ojson decisions = ojson::array();
  for (const DecisionPrediction& d : m.decisions) {
    ojson e;
    e["decision"] = std::string(to_string(d.decision));
    e["probability"] = d.probability;
    e["features"] = {{"f_angle", d.feature.f_angle}, {"f_cost", d.feature.f_cost}};
    e["converged"] = d.converged;
    e["most_likely"] = vector_json(d.most_likely.coords());
    ojson samples = ojson::array();
    for (const Trajectory& s : d.samples) samples.push_back(vector_json(s.coords()));
    e["samples"] = samples;
    e["weights"] = d.weights;
    decisions.push_back(e);
  }
  j["decisions"] = decisions;
  return j.dump(2) + "\n";
}

std::string prediction_to_csv(const PredictionMixture& m) {
  std::string out = "decision,kind,sample,weight,t,x,y\n";
  for (const DecisionPrediction& d : m.decisions) {
    const std::string name(to_string(d.decision));
    auto rows = [&](const Trajectory& traj, const char* kind, int index, double weight) {
      for (int t = 0; t < traj.length(); ++t)
        out += name + "," + kind + "," + std::to_string(index) + "," + format_double(weight) +
               "," + format_double(t * m.dt) + "," + format_double(traj.x(t)) + "," +
               format_double(traj.y(t)) + "\n";
    };
    rows(d.most_likely, "most_likely", 0, d.probability);
    for (std::size_t k = 0; k < d.samples.size(); ++k)
      rows(d.samples[k], "sample", static_cast<int>(k), d.weights[k]);
  }
  return out;
}

}  // namespace hirl
