#include "radocc/scene_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "radocc/tensor_io.hpp"

namespace radocc {

namespace fs = std::filesystem;

namespace {

std::string frame_tag(std::size_t frame) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", frame);
  return buf;
}

fs::path radar_path(const fs::path& dir, std::size_t f, std::size_t r) {
  return dir / ("radar_" + frame_tag(f) + "_" + std::to_string(r) + ".csv");
}
fs::path camera_path(const fs::path& dir, std::size_t f, std::size_t c) {
  return dir / ("cam_" + frame_tag(f) + "_" + std::to_string(c) + ".dtns");
}
fs::path occ_path(const fs::path& dir, std::size_t f) {
  return dir / ("occ_" + frame_tag(f) + ".bin");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  return os;
}

[[noreturn]] void fail(const fs::path& p, std::size_t line, const std::string& msg) {
  throw std::runtime_error(p.string() + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const fs::path& p, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(p, line, "expected a number, got '" + s + "'");
  }
  if (used != s.size()) fail(p, line, "trailing characters in '" + s + "'");
  return v;
}

// Reads a CSV with a header line; returns rows of numbers with their line numbers.
// Empty fields become NaN.
std::vector<std::pair<std::size_t, std::vector<double>>> read_csv(const fs::path& p,
                                                                  std::size_t columns) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::vector<std::pair<std::size_t, std::vector<double>>> rows;
  std::string line;
  std::size_t n = 0;
  bool header = true;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != columns) {
      fail(p, n, "expected " + std::to_string(columns) + " columns, got " +
                     std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(columns);
    for (const auto& f : fields) {
      row.push_back(f.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(f, p, n));
    }
    rows.emplace_back(n, std::move(row));
  }
  return rows;
}

std::size_t as_index(double v, const fs::path& p, std::size_t line) {
  if (!(v >= 0.0) || v != std::floor(v)) fail(p, line, "expected a non-negative integer index");
  return static_cast<std::size_t>(v);
}

}  // namespace

SceneData materialize_scene(const Scene& scene, std::size_t feature_channels,
                            const RefGrid3D& occ_grid) {
  SceneData data;
  data.rig = scene.rig;
  for (std::size_t t = 0; t < scene.ego.size(); ++t) {
    FrameData f;
    f.timestamp = scene.ego[t].timestamp;
    f.pose = scene.ego[t].pose;
    f.ego_velocity = scene.ego[t].velocity;
    for (std::size_t r = 0; r < scene.rig.radars.size(); ++r) {
      f.radar.push_back(simulate_radar_points(scene, t, r));
    }
    for (std::size_t c = 0; c < scene.rig.cameras.size(); ++c) {
      f.camera_features.push_back(render_camera_features(scene, t, c, feature_channels));
    }
    f.gt = rasterize_gt(scene, t, occ_grid);
    data.frames.push_back(std::move(f));
  }
  return data;
}

void write_scene(const fs::path& dir, const SceneData& scene) {
  fs::create_directories(dir);
  {
    std::ofstream os = open_out(dir / "calib.txt");
    write_calibration(os, scene.rig);
  }
  std::ofstream poses = open_out(dir / "poses.csv");
  poses << "frame,timestamp,r00,r01,r02,t0,r10,r11,r12,t1,r20,r21,r22,t2,vx,vy,vz\n";
  std::ofstream objects = open_out(dir / "objects.csv");
  objects << "frame,label,x,y,z,l,w,h,yaw,vx,vy\n";
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const FrameData& fr = scene.frames[f];
    poses << f << ',' << fr.timestamp;
    std::array<double, 12> m{};
    if (fr.pose) fr.pose->to_row_major(m);
    for (double v : m) {
      poses << ',';
      if (fr.pose) poses << v;
    }
    for (int a = 0; a < 3; ++a) {
      poses << ',';
      if (fr.ego_velocity) poses << (*fr.ego_velocity)[a];
    }
    poses << '\n';
    for (std::size_t r = 0; r < fr.radar.size(); ++r) {
      std::ofstream os = open_out(radar_path(dir, f, r));
      os << "x,y,z,power,snr,v_rel\n";
      for (const auto& p : fr.radar[r]) {
        os << p.x << ',' << p.y << ',' << p.z << ',' << p.power << ',' << p.snr << ',' << p.v_rel
           << '\n';
      }
    }
    for (std::size_t c = 0; c < fr.camera_features.size(); ++c) {
      save_tensor_binary(camera_path(dir, f, c), fr.camera_features[c]);
    }
    if (fr.gt) {
      for (const auto& b : fr.gt->boxes) {
        objects << f << ',' << b.label << ',' << b.x << ',' << b.y << ',' << b.z << ',' << b.l
                << ',' << b.w << ',' << b.h << ',' << b.yaw() << ',' << b.vx << ',' << b.vy
                << '\n';
      }
      const Extent3 e = fr.gt->occ_extent;
      Tensor occ({e.h, e.w, e.z});
      for (std::size_t i = 0; i < fr.gt->occ.size(); ++i) {
        occ[i] = static_cast<double>(fr.gt->occ[i]);
      }
      save_tensor_binary(occ_path(dir, f), occ);
    }
  }
}

SceneData load_scene(const fs::path& dir, const RefGrid3D& occ_grid) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a scene directory");
  SceneData scene;
  scene.rig = load_calibration(dir / "calib.txt");

  const fs::path poses_path = dir / "poses.csv";
  for (const auto& [line, row] : read_csv(poses_path, 17)) {
    const std::size_t f = as_index(row[0], poses_path, line);
    if (f != scene.frames.size()) fail(poses_path, line, "frames must be listed in order from 0");
    FrameData fr;
    fr.timestamp = row[1];
    bool has_pose = true;
    for (std::size_t i = 2; i < 14; ++i) has_pose = has_pose && !std::isnan(row[i]);
    if (has_pose) {
      fr.pose = Pose::from_row_major(std::span<const double>(row.data() + 2, 12));
      if (!fr.pose->is_valid(1e-6)) fail(poses_path, line, "pose rotation is not orthonormal");
    }
    if (!std::isnan(row[14]) && !std::isnan(row[15]) && !std::isnan(row[16])) {
      fr.ego_velocity = Vec3(row[14], row[15], row[16]);
    }
    scene.frames.push_back(std::move(fr));
  }
  if (scene.frames.empty()) throw std::runtime_error(poses_path.string() + ": no frames");

  std::map<std::size_t, BoxSet> boxes;
  const fs::path objects_path = dir / "objects.csv";
  if (fs::exists(objects_path)) {
    for (const auto& [line, row] : read_csv(objects_path, 11)) {
      const std::size_t f = as_index(row[0], objects_path, line);
      if (f >= scene.frames.size()) fail(objects_path, line, "frame index out of range");
      const std::size_t label = as_index(row[1], objects_path, line);
      if (label >= kNumDetClasses) fail(objects_path, line, "unknown object class");
      Box3D b;
      b.label = static_cast<int>(label);
      b.x = row[2];
      b.y = row[3];
      b.z = row[4];
      b.l = row[5];
      b.w = row[6];
      b.h = row[7];
      if (!(b.l > 0.0 && b.w > 0.0 && b.h > 0.0)) fail(objects_path, line, "box sizes must be > 0");
      b.cos_yaw = std::cos(row[8]);
      b.sin_yaw = std::sin(row[8]);
      b.vx = row[9];
      b.vy = row[10];
      boxes[f].push_back(b);
    }
  }

  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    FrameData& fr = scene.frames[f];
    for (std::size_t r = 0; r < scene.rig.radars.size(); ++r) {
      const fs::path p = radar_path(dir, f, r);
      std::vector<RadarPoint> pts;
      for (const auto& [line, row] : read_csv(p, 6)) {
        for (double v : row) {
          if (!std::isfinite(v)) fail(p, line, "non-finite radar value");
        }
        pts.push_back({row[0], row[1], row[2], row[3], row[4], row[5]});
      }
      fr.radar.push_back(std::move(pts));
    }
    for (std::size_t c = 0; c < scene.rig.cameras.size(); ++c) {
      const fs::path p = camera_path(dir, f, c);
      try {
        fr.camera_features.push_back(load_tensor_binary(p));
      } catch (const std::exception& e) {
        throw std::runtime_error(p.string() + ": " + e.what());
      }
    }
    const fs::path op = occ_path(dir, f);
    if (fs::exists(op)) {
      const Tensor occ = load_tensor_binary(op);
      const Extent3 e = occ_grid.extent;
      if (occ.rank() != 3 || occ.dim(0) != e.h || occ.dim(1) != e.w || occ.dim(2) != e.z) {
        throw std::runtime_error(op.string() + ": occupancy extent does not match the config");
      }
      std::vector<int> labels(occ.size());
      for (std::size_t i = 0; i < occ.size(); ++i) {
        const double v = occ[i];
        if (!(v >= 0.0 && v < static_cast<double>(kNumOccClasses)) || v != std::floor(v)) {
          throw std::runtime_error(op.string() + ": invalid occupancy label at cell " +
                                   std::to_string(i));
        }
        labels[i] = static_cast<int>(v);
      }
      fr.gt = make_ground_truth(boxes[f], std::move(labels), occ_grid);
    }
  }
  return scene;
}

}  // namespace radocc
