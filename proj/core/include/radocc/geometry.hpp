#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "radocc/tensor.hpp"

namespace radocc {

// Ego frame: x forward, y left, z up. BEV and voxel grids index rows (H) by
// ego y and columns (W) by ego x, so a (H, W) = (80, 120) grid over
// x in (-60, 60), y in (-40, 40) has square 1 m cells.

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Rigid transform p -> R p + t.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }
  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  /// Z-Y-X (yaw, pitch, roll) Euler composition.
  static Pose from_euler(double roll, double pitch, double yaw, const Vec3& t = Vec3::Zero());
  /// Row-major [R | t], 12 numbers.
  static Pose from_row_major(std::span<const double> m);
  void to_row_major(std::span<double> out) const;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Pose inverse() const;
  /// (a * b)(p) = a(b(p)).
  Pose operator*(const Pose& other) const;

  bool is_valid(double tol = 1e-9) const;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose invert(const Pose& p) { return p.inverse(); }

/// Pinhole camera. `intrinsics` maps homogeneous camera-frame points to
/// homogeneous pixel coordinates; features live on a grid `stride` times
/// coarser than the image.
struct CameraModel {
  std::string name;
  Mat34 intrinsics = Mat34::Zero();
  Pose ego_to_cam;
  std::size_t image_h = 0;
  std::size_t image_w = 0;
  std::size_t stride = 1;
  std::size_t feature_h = 0;
  std::size_t feature_w = 0;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  /// Convenience: K = [[fx,0,cx,0],[0,fy,cy,0],[0,0,1,0]].
  static CameraModel pinhole(std::string name, double fx, double fy, double cx, double cy,
                             std::size_t image_h, std::size_t image_w, std::size_t stride,
                             const Pose& ego_to_cam);
};

/// Pose mapping the ego frame into an optical camera frame (z forward, x
/// right, y down) for a camera mounted at `position` looking along ego yaw
/// angle `yaw`.
Pose camera_pose_looking(double yaw, const Vec3& position);

struct Projection {
  double u = 0.0;      // feature-grid column
  double v = 0.0;      // feature-grid row
  double depth = 0.0;  // meters along the optical axis
  bool valid = false;
};

Projection project_point(const Vec3& ego_point, const CameraModel& cam);
std::vector<Projection> project_to_image(std::span<const Vec3> points, const CameraModel& cam);

/// T_hist^-1 * T_t * p: points expressed in the ego frame at time t are
/// re-expressed in the ego frame of the historical pose. Poses map ego to world.
std::vector<Vec3> warp_points(std::span<const Vec3> points, const Pose& pose_t,
                              const Pose& pose_hist);

struct AxisRange {
  double min = 0.0;
  double max = 0.0;
  double span() const { return max - min; }
  bool contains(double v) const { return v >= min && v < max; }
};

struct GridBounds {
  AxisRange x;
  AxisRange y;
  AxisRange z;
  bool contains(const Vec3& p) const { return x.contains(p.x()) && y.contains(p.y()) && z.contains(p.z()); }
};

struct Extent2 {
  std::size_t h = 0;
  std::size_t w = 0;
  bool operator==(const Extent2&) const = default;
};

struct Extent3 {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t z = 0;
  bool operator==(const Extent3&) const = default;
  Extent2 bev() const { return {h, w}; }
};

/// Voxel reference grid. Cell (row i, col j, layer k) has its center at
/// (x_min + (j + .5) dx, y_min + (i + .5) dy, z_min + (k + .5) dz).
struct RefGrid3D {
  GridBounds bounds;
  Extent3 extent;

  double cell_x() const { return bounds.x.span() / static_cast<double>(extent.w); }
  double cell_y() const { return bounds.y.span() / static_cast<double>(extent.h); }
  double cell_z() const { return bounds.z.span() / static_cast<double>(extent.z); }
  std::size_t cell_count() const { return extent.h * extent.w * extent.z; }

  Vec3 center(std::size_t i, std::size_t j, std::size_t k) const;
  /// Metric point -> continuous grid coordinates (x = column, y = row, z = layer)
  /// in which integer values land on cell centers.
  Point3 to_grid(const Vec3& p) const;
  /// All centers, row-major over (i, j, k), matching tensor layout.
  std::vector<Vec3> centers() const;
};

/// BEV reference grid; reference heights are exactly zero.
struct RefGrid2D {
  AxisRange x;
  AxisRange y;
  Extent2 extent;

  double cell_x() const { return x.span() / static_cast<double>(extent.w); }
  double cell_y() const { return y.span() / static_cast<double>(extent.h); }

  Vec3 center(std::size_t i, std::size_t j) const;
  Point2 to_grid(const Vec3& p) const;
  std::vector<Vec3> centers() const;
};

RefGrid3D make_ref_grid_3d(const GridBounds& bounds, Extent3 extent);
RefGrid2D make_ref_grid_2d(const GridBounds& bounds, Extent2 extent);

/// Snaps `v` to the nearest integer when within `tol`; keeps lattice-aligned
/// resampling exact in the presence of round-off.
double snap_to_lattice(double v, double tol = 1e-9);

}  // namespace radocc
