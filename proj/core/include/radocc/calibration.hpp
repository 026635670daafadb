#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "radocc/geometry.hpp"

namespace radocc {

struct RadarMount {
  std::string name;
  Pose radar_to_ego;
};

struct SensorRig {
  std::vector<CameraModel> cameras;
  std::vector<RadarMount> radars;
};

// Calibration text format, one record per line, '#' starts a comment:
//
//   camera <name>
//   image_size <H_I> <W_I>
//   stride <s>
//   intrinsics <k00 k01 k02 k03 k10 ... k23>        (3x4, row-major)
//   ego_to_cam <r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2>
//   radar <name>
//   radar_to_ego <12 numbers, same layout as ego_to_cam>
//
// `image_size`, `stride`, `intrinsics` and `ego_to_cam` apply to the most
// recent `camera`; `radar_to_ego` to the most recent `radar`.
void write_calibration(std::ostream& os, const SensorRig& rig);
SensorRig read_calibration(std::istream& is, const std::string& source = "<stream>");
SensorRig load_calibration(const std::filesystem::path& path);

}  // namespace radocc
