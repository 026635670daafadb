#include "radocc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace radocc {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config key '" + key + "': " + why);
}

void require_positive(std::size_t v, const std::string& key) {
  if (v == 0) bad(key, "must be >= 1");
}

void check_range(const AxisRange& r, const std::string& key) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.min < r.max)) {
    bad(key, "needs finite min < max");
  }
}

}  // namespace

SynthConfig PipelineConfig::desk_synth() {
  SynthConfig s;
  s.frames = 3;
  s.cameras = 2;
  s.radars = 6;
  return s;
}

PipelineConfig PipelineConfig::desk() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::paper_scale() {
  PipelineConfig c;
  c.voxel = {80, 120, 8};
  c.bev = {160, 240};
  c.occ = {160, 240, 16};
  c.frames = 4;
  c.encoder_layers = 2;
  c.channels = 32;
  c.radar_channels = 32;
  c.occ_hidden = 64;
  c.synth.cameras = 6;
  c.synth.image_h = 256;
  c.synth.image_w = 704;
  c.synth.stride = 16;
  c.synth.frames = 4;
  return c;
}

void PipelineConfig::validate() const {
  check_range(bounds.x, "bounds.x");
  check_range(bounds.y, "bounds.y");
  check_range(bounds.z, "bounds.z");
  for (auto [v, k] : {std::pair{voxel.h, "voxel[0]"}, {voxel.w, "voxel[1]"}, {voxel.z, "voxel[2]"},
                      {bev.h, "bev[0]"}, {bev.w, "bev[1]"}, {occ.h, "occ[0]"}, {occ.w, "occ[1]"},
                      {occ.z, "occ[2]"}}) {
    require_positive(v, k);
  }
  if (occ.h != 2 * voxel.h || occ.w != 2 * voxel.w || occ.z != 2 * voxel.z) {
    bad("occ", "must be exactly twice the voxel extent in every axis (2x upsampling)");
  }
  require_positive(frames, "frames");
  require_positive(encoder_layers, "encoder_layers");
  require_positive(heads, "heads");
  require_positive(points, "points");
  require_positive(channels, "channels");
  require_positive(radar_channels, "radar_channels");
  require_positive(occ_hidden, "occ_hidden");
  require_positive(queries, "queries");
  require_positive(radar_sweeps, "radar_sweeps");
  if (channels % heads != 0) {
    bad("heads", "channels (" + std::to_string(channels) + ") must be divisible by heads (" +
                     std::to_string(heads) + ")");
  }
  if (radar_channels % heads != 0) {
    bad("heads", "radar_channels (" + std::to_string(radar_channels) +
                     ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
  if (top_k == 0 || top_k > queries) bad("top_k", "must be in [1, queries]");
  if (thresholds.empty()) bad("thresholds", "needs at least one threshold");
  for (double t : thresholds) {
    if (!(t > 0.0) || !std::isfinite(t)) bad("thresholds", "every threshold must be > 0");
  }
  if (!(loss.lambda_cls >= 0.0)) bad("loss.lambda_cls", "must be >= 0");
  if (!(loss.lambda_reg >= 0.0)) bad("loss.lambda_reg", "must be >= 0");
  if (!(loss.focal_alpha >= 0.0 && loss.focal_alpha <= 1.0)) bad("loss.focal_alpha", "must be in [0, 1]");
  if (!(loss.focal_gamma >= 0.0)) bad("loss.focal_gamma", "must be >= 0");
  require_positive(synth.frames, "synth.frames");
  require_positive(synth.cameras, "synth.cameras");
  require_positive(synth.radars, "synth.radars");
  require_positive(synth.stride, "synth.stride");
  if (synth.image_h == 0 || synth.image_h % synth.stride != 0) {
    bad("synth.image_h", "must be a positive multiple of synth.stride");
  }
  if (synth.image_w == 0 || synth.image_w % synth.stride != 0) {
    bad("synth.image_w", "must be a positive multiple of synth.stride");
  }
  if (!(synth.dt > 0.0)) bad("synth.dt", "must be > 0");
  if (!(synth.horizontal_fov_deg > 0.0 && synth.horizontal_fov_deg < 180.0)) {
    bad("synth.horizontal_fov_deg", "must be in (0, 180)");
  }
  if (!(synth.jitter >= 0.0)) bad("synth.jitter", "must be >= 0");
  if (!(synth.placement_fraction > 0.0 && synth.placement_fraction <= 1.0)) {
    bad("synth.placement_fraction", "must be in (0, 1]");
  }
}

namespace {

template <typename T>
void read_value(const json& j, const char* key, T& out, const std::string& prefix) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(prefix + key, e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& prefix) {
  if (!j.is_object()) bad(prefix.empty() ? "<root>" : prefix, "must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) bad(prefix + k, "unknown key");
  }
}

AxisRange read_range(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) bad(key, "expected [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<std::size_t> read_extent(const json& j, std::size_t n, const std::string& key) {
  if (!j.is_array() || j.size() != n) bad(key, "expected " + std::to_string(n) + " extents");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) bad(key, "extents must be positive integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text, PipelineConfig c,
                            const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(source + ": " + e.what());
  }
  check_keys(j,
             {"bounds", "voxel", "bev", "occ", "frames", "encoder_layers", "heads", "points",
              "channels", "radar_channels", "occ_hidden", "queries", "top_k", "radar_sweeps",
              "seed", "loss", "thresholds", "synth"},
             "");
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    check_keys(b, {"x", "y", "z"}, "bounds.");
    if (b.contains("x")) c.bounds.x = read_range(b["x"], "bounds.x");
    if (b.contains("y")) c.bounds.y = read_range(b["y"], "bounds.y");
    if (b.contains("z")) c.bounds.z = read_range(b["z"], "bounds.z");
  }
  if (j.contains("voxel")) {
    const auto e = read_extent(j["voxel"], 3, "voxel");
    c.voxel = {e[0], e[1], e[2]};
  }
  if (j.contains("bev")) {
    const auto e = read_extent(j["bev"], 2, "bev");
    c.bev = {e[0], e[1]};
  }
  if (j.contains("occ")) {
    const auto e = read_extent(j["occ"], 3, "occ");
    c.occ = {e[0], e[1], e[2]};
  }
  read_value(j, "frames", c.frames, "");
  read_value(j, "encoder_layers", c.encoder_layers, "");
  read_value(j, "heads", c.heads, "");
  read_value(j, "points", c.points, "");
  read_value(j, "channels", c.channels, "");
  read_value(j, "radar_channels", c.radar_channels, "");
  read_value(j, "occ_hidden", c.occ_hidden, "");
  read_value(j, "queries", c.queries, "");
  read_value(j, "top_k", c.top_k, "");
  read_value(j, "radar_sweeps", c.radar_sweeps, "");
  read_value(j, "seed", c.seed, "");
  read_value(j, "thresholds", c.thresholds, "");
  if (j.contains("loss")) {
    const json& l = j["loss"];
    check_keys(l, {"lambda_cls", "lambda_reg", "focal_alpha", "focal_gamma"}, "loss.");
    read_value(l, "lambda_cls", c.loss.lambda_cls, "loss.");
    read_value(l, "lambda_reg", c.loss.lambda_reg, "loss.");
    read_value(l, "focal_alpha", c.loss.focal_alpha, "loss.");
    read_value(l, "focal_gamma", c.loss.focal_gamma, "loss.");
  }
  if (j.contains("synth")) {
    const json& s = j["synth"];
    check_keys(s,
               {"frames", "dt", "cars", "pedestrians", "riders", "large_vehicles", "cameras",
                "radars", "image_h", "image_w", "stride", "horizontal_fov_deg",
                "points_per_object", "ground_points", "wall_points", "jitter", "max_ego_speed",
                "max_yaw_rate", "walls", "placement_fraction"},
               "synth.");
    SynthConfig& y = c.synth;
    read_value(s, "frames", y.frames, "synth.");
    read_value(s, "dt", y.dt, "synth.");
    read_value(s, "cars", y.cars, "synth.");
    read_value(s, "pedestrians", y.pedestrians, "synth.");
    read_value(s, "riders", y.riders, "synth.");
    read_value(s, "large_vehicles", y.large_vehicles, "synth.");
    read_value(s, "cameras", y.cameras, "synth.");
    read_value(s, "radars", y.radars, "synth.");
    read_value(s, "image_h", y.image_h, "synth.");
    read_value(s, "image_w", y.image_w, "synth.");
    read_value(s, "stride", y.stride, "synth.");
    read_value(s, "horizontal_fov_deg", y.horizontal_fov_deg, "synth.");
    read_value(s, "points_per_object", y.points_per_object, "synth.");
    read_value(s, "ground_points", y.ground_points, "synth.");
    read_value(s, "wall_points", y.wall_points, "synth.");
    read_value(s, "jitter", y.jitter, "synth.");
    read_value(s, "max_ego_speed", y.max_ego_speed, "synth.");
    read_value(s, "max_yaw_rate", y.max_yaw_rate, "synth.");
    read_value(s, "walls", y.walls, "synth.");
    read_value(s, "placement_fraction", y.placement_fraction, "synth.");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base), path.string());
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["bounds"] = {{"x", {c.bounds.x.min, c.bounds.x.max}},
                 {"y", {c.bounds.y.min, c.bounds.y.max}},
                 {"z", {c.bounds.z.min, c.bounds.z.max}}};
  j["voxel"] = {c.voxel.h, c.voxel.w, c.voxel.z};
  j["bev"] = {c.bev.h, c.bev.w};
  j["occ"] = {c.occ.h, c.occ.w, c.occ.z};
  j["frames"] = c.frames;
  j["encoder_layers"] = c.encoder_layers;
  j["heads"] = c.heads;
  j["points"] = c.points;
  j["channels"] = c.channels;
  j["radar_channels"] = c.radar_channels;
  j["occ_hidden"] = c.occ_hidden;
  j["queries"] = c.queries;
  j["top_k"] = c.top_k;
  j["radar_sweeps"] = c.radar_sweeps;
  j["seed"] = c.seed;
  j["loss"] = {{"lambda_cls", c.loss.lambda_cls},
               {"lambda_reg", c.loss.lambda_reg},
               {"focal_alpha", c.loss.focal_alpha},
               {"focal_gamma", c.loss.focal_gamma}};
  j["thresholds"] = c.thresholds;
  const SynthConfig& s = c.synth;
  j["synth"] = {{"frames", s.frames},
                {"dt", s.dt},
                {"cars", s.cars},
                {"pedestrians", s.pedestrians},
                {"riders", s.riders},
                {"large_vehicles", s.large_vehicles},
                {"cameras", s.cameras},
                {"radars", s.radars},
                {"image_h", s.image_h},
                {"image_w", s.image_w},
                {"stride", s.stride},
                {"horizontal_fov_deg", s.horizontal_fov_deg},
                {"points_per_object", s.points_per_object},
                {"ground_points", s.ground_points},
                {"wall_points", s.wall_points},
                {"jitter", s.jitter},
                {"max_ego_speed", s.max_ego_speed},
                {"max_yaw_rate", s.max_yaw_rate},
                {"walls", s.walls},
                {"placement_fraction", s.placement_fraction}};
  return j.dump(2);
}

}  // namespace radocc
