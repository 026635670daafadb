#include "radocc/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace radocc {

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  p.translation = t;
  return p;
}

Pose Pose::from_euler(double roll, double pitch, double yaw, const Vec3& t) {
  Pose p;
  p.rotation = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                Eigen::AngleAxisd(roll, Vec3::UnitX()))
                   .toRotationMatrix();
  p.translation = t;
  return p;
}

Pose Pose::from_row_major(std::span<const double> m) {
  if (m.size() != 12) throw std::invalid_argument("Pose::from_row_major: need 12 numbers");
  Pose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = m[static_cast<std::size_t>(r * 4 + c)];
    p.translation(r) = m[static_cast<std::size_t>(r * 4 + 3)];
  }
  return p;
}

void Pose::to_row_major(std::span<double> out) const {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 4 + c)] = rotation(r, c);
    out[static_cast<std::size_t>(r * 4 + 3)] = translation(r);
  }
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(p.rotation * translation);
  return p;
}

Pose Pose::operator*(const Pose& other) const {
  Pose p;
  p.rotation = rotation * other.rotation;
  p.translation = rotation * other.translation + translation;
  return p;
}

bool Pose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

// ---------------------------------------------------------------------------

void CameraModel::validate() const {
  const std::string who = "camera '" + name + "': ";
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0)) {
    throw std::invalid_argument(who + "focal lengths K[0][0], K[1][1] must be positive");
  }
  if (!ego_to_cam.is_valid(1e-6)) {
    throw std::invalid_argument(who + "ego_to_cam is not a rigid transform");
  }
  if (stride == 0 || image_h == 0 || image_w == 0) {
    throw std::invalid_argument(who + "image extent and stride must be positive");
  }
  if (feature_h != image_h / stride || feature_w != image_w / stride || feature_h == 0 ||
      feature_w == 0) {
    throw std::invalid_argument(who + "feature extent must equal image extent / stride");
  }
}

CameraModel CameraModel::pinhole(std::string name, double fx, double fy, double cx, double cy,
                                 std::size_t image_h, std::size_t image_w, std::size_t stride,
                                 const Pose& ego_to_cam) {
  CameraModel cam;
  cam.name = std::move(name);
  cam.intrinsics << fx, 0, cx, 0, 0, fy, cy, 0, 0, 0, 1, 0;
  cam.ego_to_cam = ego_to_cam;
  cam.image_h = image_h;
  cam.image_w = image_w;
  cam.stride = stride;
  cam.feature_h = stride ? image_h / stride : 0;
  cam.feature_w = stride ? image_w / stride : 0;
  return cam;
}

Pose camera_pose_looking(double yaw, const Vec3& position) {
  // Rows of cam_from_ego express the optical axes in ego coordinates:
  // x_cam = right = -left, y_cam = down, z_cam = forward.
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 left(-std::sin(yaw), std::cos(yaw), 0.0);
  const Vec3 up = Vec3::UnitZ();
  Mat3 cam_from_ego;
  cam_from_ego.row(0) = -left.transpose();
  cam_from_ego.row(1) = -up.transpose();
  cam_from_ego.row(2) = forward.transpose();
  Pose p;
  p.rotation = cam_from_ego;
  p.translation = -(cam_from_ego * position);
  return p;
}

Projection project_point(const Vec3& ego_point, const CameraModel& cam) {
  const Vec3 pc = cam.ego_to_cam.apply(ego_point);
  const Vec3 h = cam.intrinsics * pc.homogeneous();
  Projection out;
  out.depth = h.z();
  if (!(h.z() > 0.0)) return out;
  const double s = static_cast<double>(cam.stride);
  out.u = h.x() / h.z() / s;
  out.v = h.y() / h.z() / s;
  out.valid = out.u >= 0.0 && out.u < static_cast<double>(cam.feature_w) && out.v >= 0.0 &&
              out.v < static_cast<double>(cam.feature_h);
  return out;
}

std::vector<Projection> project_to_image(std::span<const Vec3> points, const CameraModel& cam) {
  std::vector<Projection> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(project_point(p, cam));
  return out;
}

std::vector<Vec3> warp_points(std::span<const Vec3> points, const Pose& pose_t,
                              const Pose& pose_hist) {
  const Pose rel = pose_hist.inverse() * pose_t;
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(rel.apply(p));
  return out;
}

// ---------------------------------------------------------------------------

Vec3 RefGrid3D::center(std::size_t i, std::size_t j, std::size_t k) const {
  return {bounds.x.min + (static_cast<double>(j) + 0.5) * cell_x(),
          bounds.y.min + (static_cast<double>(i) + 0.5) * cell_y(),
          bounds.z.min + (static_cast<double>(k) + 0.5) * cell_z()};
}

Point3 RefGrid3D::to_grid(const Vec3& p) const {
  return {(p.x() - bounds.x.min) / cell_x() - 0.5, (p.y() - bounds.y.min) / cell_y() - 0.5,
          (p.z() - bounds.z.min) / cell_z() - 0.5};
}

std::vector<Vec3> RefGrid3D::centers() const {
  std::vector<Vec3> out;
  out.reserve(cell_count());
  for (std::size_t i = 0; i < extent.h; ++i)
    for (std::size_t j = 0; j < extent.w; ++j)
      for (std::size_t k = 0; k < extent.z; ++k) out.push_back(center(i, j, k));
  return out;
}

Vec3 RefGrid2D::center(std::size_t i, std::size_t j) const {
  return {x.min + (static_cast<double>(j) + 0.5) * cell_x(),
          y.min + (static_cast<double>(i) + 0.5) * cell_y(), 0.0};
}

Point2 RefGrid2D::to_grid(const Vec3& p) const {
  return {(p.x() - x.min) / cell_x() - 0.5, (p.y() - y.min) / cell_y() - 0.5};
}

std::vector<Vec3> RefGrid2D::centers() const {
  std::vector<Vec3> out;
  out.reserve(extent.h * extent.w);
  for (std::size_t i = 0; i < extent.h; ++i)
    for (std::size_t j = 0; j < extent.w; ++j) out.push_back(center(i, j));
  return out;
}

namespace {

void check_axis(const AxisRange& r, const char* axis) {
  if (!(std::isfinite(r.min) && std::isfinite(r.max) && r.min < r.max)) {
    throw std::invalid_argument(std::string("grid bounds: axis ") + axis +
                                " requires finite min < max");
  }
}

}  // namespace

RefGrid3D make_ref_grid_3d(const GridBounds& bounds, Extent3 extent) {
  check_axis(bounds.x, "x");
  check_axis(bounds.y, "y");
  check_axis(bounds.z, "z");
  if (extent.h == 0 || extent.w == 0 || extent.z == 0) {
    throw std::invalid_argument("grid extents must be >= 1");
  }
  return RefGrid3D{bounds, extent};
}

RefGrid2D make_ref_grid_2d(const GridBounds& bounds, Extent2 extent) {
  check_axis(bounds.x, "x");
  check_axis(bounds.y, "y");
  if (extent.h == 0 || extent.w == 0) throw std::invalid_argument("grid extents must be >= 1");
  return RefGrid2D{bounds.x, bounds.y, extent};
}

double snap_to_lattice(double v, double tol) {
  const double r = std::nearbyint(v);
  return std::abs(v - r) <= tol ? r : v;
}

}  // namespace radocc
