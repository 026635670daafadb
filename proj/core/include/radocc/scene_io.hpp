#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "radocc/calibration.hpp"
#include "radocc/radar.hpp"
#include "radocc/synthscene.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// Everything the pipeline consumes for one timestep.
struct FrameData {
  double timestamp = 0.0;
  std::optional<Pose> pose;          // ego -> world
  std::optional<Vec3> ego_velocity;  // ego frame
  std::vector<std::vector<RadarPoint>> radar;  // one list per radar mount
  std::vector<Tensor> camera_features;         // one C x H_C x W_C map per camera
  std::optional<GroundTruth> gt;
};

struct SceneData {
  SensorRig rig;
  std::vector<FrameData> frames;
};

/// Simulates radar, renders camera features and rasterizes ground truth for
/// every frame of a synthetic scene.
SceneData materialize_scene(const Scene& scene, std::size_t feature_channels,
                            const RefGrid3D& occ_grid);

/// Scene directory layout:
///   calib.txt              sensor calibration
///   poses.csv              frame,timestamp,12 pose numbers,vx,vy,vz
///   objects.csv            frame,label,x,y,z,l,w,h,yaw,vx,vy (ego frame)
///   radar_FFFF_R.csv       x,y,z,power,snr,v_rel for frame F, radar R
///   cam_FFFF_C.dtns        camera feature tensor for frame F, camera C
///   occ_FFFF.bin           H x W x Z occupancy labels (tensor binary format)
void write_scene(const std::filesystem::path& dir, const SceneData& scene);

/// Reads a scene directory. Ground truth is attached to a frame when its
/// occupancy dump exists; its extent must match `occ_grid`. Errors name the
/// offending file.
SceneData load_scene(const std::filesystem::path& dir, const RefGrid3D& occ_grid);

}  // namespace radocc
