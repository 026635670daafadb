#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "radocc/calibration.hpp"
#include "radocc/geometry.hpp"
#include "radocc/heads.hpp"
#include "radocc/radar.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

struct SynthConfig {
  std::size_t frames = 2;
  double dt = 0.5;
  std::size_t cars = 4;
  std::size_t pedestrians = 3;
  std::size_t riders = 2;
  std::size_t large_vehicles = 1;
  std::size_t cameras = 6;
  std::size_t radars = 6;
  std::size_t image_h = 96;
  std::size_t image_w = 160;
  std::size_t stride = 8;
  double horizontal_fov_deg = 70.0;
  std::size_t points_per_object = 24;
  std::size_t ground_points = 48;
  std::size_t wall_points = 24;
  double jitter = 0.0;  // position noise sigma (m); v_rel noise is jitter / 10
  double max_ego_speed = 12.0;
  double max_yaw_rate = 0.3;
  bool walls = true;
  /// Objects are placed within this fraction of the x/y range around the
  /// initial ego position.
  double placement_fraction = 0.75;
};

/// Object with constant planar world velocity. `box` is the world-frame box
/// at t = 0 with its velocity in (vx, vy).
struct SceneObject {
  Box3D box;
  int instance = 0;
};

/// Static world box carrying an occupancy label (walls, fences).
struct StaticBox {
  Box3D box;
  int occ_label = 11;
};

struct EgoState {
  Pose pose;          // ego -> world
  Vec3 velocity;      // in the ego frame (m/s)
  double timestamp = 0.0;
};

struct Scene {
  std::uint64_t seed = 0;
  SynthConfig config;
  GridBounds bounds;
  std::vector<EgoState> ego;
  std::vector<SceneObject> objects;
  std::vector<StaticBox> statics;
  SensorRig rig;
};

/// Occupancy label of a detection class.
int occ_label_for_class(int det_label);

Scene generate_scene(std::uint64_t seed, const SynthConfig& config, const GridBounds& bounds);

/// World-frame box of an object at frame t (center advanced by v * t * dt).
Box3D object_at(const Scene& scene, const SceneObject& obj, std::size_t t);
/// The same box expressed in the ego frame of frame t; velocity rotated into
/// that frame.
Box3D to_ego(const Box3D& world_box, const Pose& ego_pose);

bool box_contains(const Box3D& box, const Vec3& p);
/// Distance along a ray to the first intersection with the box, if any.
std::optional<double> ray_box_hit(const Vec3& origin, const Vec3& dir, const Box3D& box);

/// Radar points of one mount at frame t, in that radar's frame, with
/// v_rel = (v_object - v_ego) . line of sight (radar lever arm ignored).
/// `sources`, when given, receives the object index of every point (-1 for
/// static surfaces).
std::vector<RadarPoint> simulate_radar_points(const Scene& scene, std::size_t t,
                                              std::size_t radar_idx,
                                              std::vector<int>* sources = nullptr);

/// Sweep with calibration and ego velocity filled in; sweep_to_current maps
/// frame t's ego frame into frame `current`'s.
RadarSweep simulate_radar_sweep(const Scene& scene, std::size_t t, std::size_t radar_idx,
                                std::size_t current);

/// Ground-frame velocity the compensation should recover for a radar-frame
/// point of a box moving with world velocity (vx, vy): the line-of-sight
/// component, vertical part dropped, in frame `current`'s ego frame.
Vec3 expected_compensated_velocity(const Scene& scene, std::size_t t, std::size_t radar_idx,
                                   std::size_t current, const RadarPoint& point,
                                   const Vec3& world_velocity);

/// Feature encoding of an occupancy label (kOccFree = background) and
/// instance, length `channels`.
std::vector<double> feature_encoding(int occ_label, int instance, std::size_t channels);

/// Procedural C x H_C x W_C features: each cell encodes the nearest surface
/// hit by the ray through its center (objects, statics, ground at z = 0).
Tensor render_camera_features(const Scene& scene, std::size_t t, std::size_t cam_idx,
                              std::size_t channels);

struct GroundTruth {
  BoxSet boxes;             // ego frame at t
  std::vector<int> occ;     // H * W * Z labels, row-major
  Extent3 occ_extent;
  Tensor occ_mask;          // H x W x Z, 1 = occupied
  Tensor bev_mask;          // H x W, 1 = inside a box footprint
};

/// Cells whose center lies inside a box footprint.
Tensor footprint_mask(const BoxSet& boxes, const RefGrid2D& grid);
/// Static labels plus object interiors; ground is the layer directly below z = 0.
std::vector<int> occupancy_labels_for(const BoxSet& ego_boxes, const std::vector<Box3D>& statics,
                                      const std::vector<int>& static_labels,
                                      const RefGrid3D& grid);
GroundTruth rasterize_gt(const Scene& scene, std::size_t t, const RefGrid3D& occ_grid);

/// Builds occupancy and BEV masks from labels and boxes.
GroundTruth make_ground_truth(BoxSet boxes, std::vector<int> occ, const RefGrid3D& occ_grid);

}  // namespace radocc
