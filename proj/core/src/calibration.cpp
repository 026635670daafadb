#include "radocc/calibration.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace radocc {

namespace {

void write_numbers(std::ostream& os, std::span<const double> v) {
  for (double x : v) os << ' ' << x;
  os << '\n';
}

std::array<double, 12> read_twelve(std::istringstream& ls, const std::string& where) {
  std::array<double, 12> v{};
  for (auto& x : v) {
    if (!(ls >> x)) throw std::runtime_error(where + ": expected 12 numbers");
  }
  return v;
}

}  // namespace

void write_calibration(std::ostream& os, const SensorRig& rig) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "# radocc calibration\n";
  std::array<double, 12> buf{};
  for (const auto& cam : rig.cameras) {
    os << "camera " << cam.name << '\n';
    os << "image_size " << cam.image_h << ' ' << cam.image_w << '\n';
    os << "stride " << cam.stride << '\n';
    os << "intrinsics";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) buf[static_cast<std::size_t>(r * 4 + c)] = cam.intrinsics(r, c);
    write_numbers(os, buf);
    os << "ego_to_cam";
    cam.ego_to_cam.to_row_major(buf);
    write_numbers(os, buf);
  }
  for (const auto& radar : rig.radars) {
    os << "radar " << radar.name << '\n';
    os << "radar_to_ego";
    radar.radar_to_ego.to_row_major(buf);
    write_numbers(os, buf);
  }
}

SensorRig read_calibration(std::istream& is, const std::string& source) {
  SensorRig rig;
  enum class Current { none, camera, radar } current = Current::none;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (key == "camera") {
      CameraModel cam;
      if (!(ls >> cam.name)) throw std::runtime_error(where + ": camera needs a name");
      rig.cameras.push_back(cam);
      current = Current::camera;
    } else if (key == "radar") {
      RadarMount r;
      if (!(ls >> r.name)) throw std::runtime_error(where + ": radar needs a name");
      rig.radars.push_back(r);
      current = Current::radar;
    } else if (key == "radar_to_ego") {
      if (current != Current::radar) throw std::runtime_error(where + ": radar_to_ego outside a radar block");
      rig.radars.back().radar_to_ego = Pose::from_row_major(read_twelve(ls, where));
    } else {
      if (current != Current::camera) {
        throw std::runtime_error(where + ": '" + key + "' outside a camera block");
      }
      CameraModel& cam = rig.cameras.back();
      if (key == "image_size") {
        if (!(ls >> cam.image_h >> cam.image_w)) throw std::runtime_error(where + ": image_size needs H W");
      } else if (key == "stride") {
        if (!(ls >> cam.stride)) throw std::runtime_error(where + ": stride needs a value");
      } else if (key == "intrinsics") {
        const auto v = read_twelve(ls, where);
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 4; ++c) cam.intrinsics(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
      } else if (key == "ego_to_cam") {
        cam.ego_to_cam = Pose::from_row_major(read_twelve(ls, where));
      } else {
        throw std::runtime_error(where + ": unknown key '" + key + "'");
      }
    }
  }
  for (auto& cam : rig.cameras) {
    if (cam.stride) {
      cam.feature_h = cam.image_h / cam.stride;
      cam.feature_w = cam.image_w / cam.stride;
    }
    try {
      cam.validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(source + ": " + e.what());
    }
  }
  for (const auto& r : rig.radars) {
    if (!r.radar_to_ego.is_valid(1e-6)) {
      throw std::runtime_error(source + ": radar '" + r.name + "' has an invalid radar_to_ego pose");
    }
  }
  return rig;
}

SensorRig load_calibration(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open calibration file: " + path.string());
  return read_calibration(is, path.string());
}

}  // namespace radocc
