#include "radocc/synthscene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "radocc/rng.hpp"

namespace radocc {

namespace {

constexpr double kPi = std::numbers::pi;

double pose_yaw(const Pose& p) { return std::atan2(p.rotation(1, 0), p.rotation(0, 0)); }

Box3D make_box(double x, double y, double z, double l, double w, double h, double yaw,
               int label) {
  Box3D b;
  b.x = x;
  b.y = y;
  b.z = z;
  b.l = l;
  b.w = w;
  b.h = h;
  b.cos_yaw = std::cos(yaw);
  b.sin_yaw = std::sin(yaw);
  b.label = label;
  return b;
}

struct ClassSpec {
  ObjectClass cls;
  double l, w, h;
  double max_speed;
};

constexpr std::array<ClassSpec, kNumDetClasses> kClassSpecs = {{
    {ObjectClass::car, 4.5, 1.9, 1.6, 10.0},
    {ObjectClass::pedestrian, 0.6, 0.6, 1.75, 1.5},
    {ObjectClass::rider, 1.8, 0.7, 1.6, 6.0},
    {ObjectClass::large_vehicle, 10.0, 2.6, 3.2, 8.0},
}};

Vec3 local_of(const Box3D& b, const Vec3& p) {
  const double dx = p.x() - b.x, dy = p.y() - b.y;
  return {b.cos_yaw * dx + b.sin_yaw * dy, -b.sin_yaw * dx + b.cos_yaw * dy, p.z() - b.z};
}

Vec3 world_of(const Box3D& b, const Vec3& local) {
  return {b.x + b.cos_yaw * local.x() - b.sin_yaw * local.y(),
          b.y + b.sin_yaw * local.x() + b.cos_yaw * local.y(), b.z + local.z()};
}

// Uniform point on the box surface, faces weighted by area.
Vec3 sample_surface(const Box3D& b, CounterRng& rng) {
  const double a_lw = b.l * b.w, a_lh = b.l * b.h, a_wh = b.w * b.h;
  const double total = 2.0 * (a_lw + a_lh + a_wh);
  double r = rng.uniform(0.0, total);
  const double side = rng.uniform() < 0.5 ? -0.5 : 0.5;
  const double s = rng.uniform(-0.5, 0.5), u = rng.uniform(-0.5, 0.5);
  Vec3 local;
  if ((r -= 2.0 * a_lw) < 0.0) {
    local = {s * b.l, u * b.w, side * b.h};
  } else if ((r -= 2.0 * a_lh) < 0.0) {
    local = {s * b.l, side * b.w, u * b.h};
  } else {
    local = {side * b.l, s * b.w, u * b.h};
  }
  return world_of(b, local);
}

std::uint64_t stream_id(std::string_view name, std::size_t a, std::size_t b) {
  return CounterRng::fnv1a(name) ^ (static_cast<std::uint64_t>(a) << 20) ^
         static_cast<std::uint64_t>(b);
}

double footprint_radius(const Box3D& b) { return 0.5 * std::hypot(b.l, b.w); }

}  // namespace

int occ_label_for_class(int det_label) {
  if (det_label < 0 || static_cast<std::size_t>(det_label) >= kNumDetClasses) {
    throw std::invalid_argument("occ_label_for_class: bad detection label " +
                                std::to_string(det_label));
  }
  return det_label + 1;
}

Scene generate_scene(std::uint64_t seed, const SynthConfig& cfg, const GridBounds& bounds) {
  if (cfg.frames == 0) throw std::invalid_argument("generate_scene: frames must be >= 1");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("generate_scene: dt must be > 0");
  if (cfg.image_h == 0 || cfg.image_w == 0 || cfg.stride == 0 ||
      cfg.image_h % cfg.stride != 0 || cfg.image_w % cfg.stride != 0) {
    throw std::invalid_argument("generate_scene: image size must be a positive multiple of stride");
  }
  Scene scene;
  scene.seed = seed;
  scene.config = cfg;
  scene.bounds = bounds;

  // Ego: constant speed and yaw rate, integrated in closed form.
  CounterRng ego_rng(seed, "ego");
  const double speed = ego_rng.uniform(0.0, cfg.max_ego_speed);
  const double omega = ego_rng.uniform(-cfg.max_yaw_rate, cfg.max_yaw_rate);
  const double psi0 = ego_rng.uniform(-0.3, 0.3);
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    const double tau = static_cast<double>(t) * cfg.dt;
    const double psi = psi0 + omega * tau;
    double x, y;
    if (std::abs(omega) > 1e-9) {
      x = speed / omega * (std::sin(psi) - std::sin(psi0));
      y = -speed / omega * (std::cos(psi) - std::cos(psi0));
    } else {
      x = speed * tau * std::cos(psi0);
      y = speed * tau * std::sin(psi0);
    }
    scene.ego.push_back({Pose::from_yaw(psi, Vec3(x, y, 0.0)), Vec3(speed, 0.0, 0.0), tau});
  }

  // Static walls along the world x axis.
  const double wall_y = 0.85 * std::max(std::abs(bounds.y.min), std::abs(bounds.y.max));
  if (cfg.walls) {
    for (double side : {-1.0, 1.0}) {
      scene.statics.push_back(
          {make_box(0.0, side * wall_y, 1.5, 4.0 * bounds.x.span(), 0.5, 3.0, 0.0, -1), 11});
    }
  }

  // Objects: rejection sampling for non-overlapping footprints.
  CounterRng obj_rng(seed, "objects");
  const std::array<std::size_t, kNumDetClasses> counts = {cfg.cars, cfg.pedestrians, cfg.riders,
                                                          cfg.large_vehicles};
  const double px = cfg.placement_fraction * 0.5 * bounds.x.span();
  const double py = std::min(cfg.placement_fraction * 0.5 * bounds.y.span(), wall_y - 3.0);
  int instance = 1;
  for (std::size_t c = 0; c < kNumDetClasses; ++c) {
    const ClassSpec& spec = kClassSpecs[c];
    for (std::size_t n = 0; n < counts[c]; ++n) {
      const double jitter = obj_rng.uniform(0.9, 1.1);
      const double l = spec.l * jitter, w = spec.w * jitter, h = spec.h * jitter;
      const double yaw = obj_rng.uniform(-kPi, kPi);
      const double v = obj_rng.uniform() < 0.3 ? 0.0 : obj_rng.uniform(0.2, spec.max_speed);
      Box3D box;
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        const double x = obj_rng.uniform(-px, px);
        const double y = obj_rng.uniform(-py, py);
        box = make_box(x, y, 0.5 * h, l, w, h, yaw, static_cast<int>(c));
        if (std::hypot(x, y) < 5.0 + footprint_radius(box)) continue;
        placed = std::none_of(scene.objects.begin(), scene.objects.end(), [&](const auto& o) {
          return std::hypot(o.box.x - x, o.box.y - y) <
                 footprint_radius(o.box) + footprint_radius(box) + 0.5;
        });
      }
      if (!placed) continue;
      box.vx = v * std::cos(yaw);
      box.vy = v * std::sin(yaw);
      scene.objects.push_back({box, instance++});
    }
  }

  // Rig: cameras and radars evenly spaced in yaw.
  CounterRng rig_rng(seed, "rig");
  const double fx = 0.5 * static_cast<double>(cfg.image_w) /
                    std::tan(0.5 * cfg.horizontal_fov_deg * kPi / 180.0);
  for (std::size_t i = 0; i < cfg.cameras; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(cfg.cameras);
    const Vec3 pos(0.5 * std::cos(a), 0.5 * std::sin(a), 1.6);
    scene.rig.cameras.push_back(CameraModel::pinhole(
        "cam" + std::to_string(i), fx, fx, 0.5 * static_cast<double>(cfg.image_w),
        0.5 * static_cast<double>(cfg.image_h), cfg.image_h, cfg.image_w, cfg.stride,
        camera_pose_looking(a, pos)));
  }
  for (std::size_t i = 0; i < cfg.radars; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(cfg.radars);
    const double roll = rig_rng.uniform(-0.035, 0.035);
    const double pitch = rig_rng.uniform(-0.035, 0.035);
    const Vec3 pos(1.5 * std::cos(a), 0.9 * std::sin(a), 0.5);
    scene.rig.radars.push_back({"radar" + std::to_string(i), Pose::from_euler(roll, pitch, a, pos)});
  }
  return scene;
}

Box3D object_at(const Scene& scene, const SceneObject& obj, std::size_t t) {
  const double tau = static_cast<double>(t) * scene.config.dt;
  Box3D b = obj.box;
  b.x += obj.box.vx * tau;
  b.y += obj.box.vy * tau;
  return b;
}

Box3D to_ego(const Box3D& world_box, const Pose& ego_pose) {
  const Pose inv = ego_pose.inverse();
  Box3D b = world_box;
  const Vec3 c = inv.apply(Vec3(world_box.x, world_box.y, world_box.z));
  b.x = c.x();
  b.y = c.y();
  b.z = c.z();
  const double yaw = world_box.yaw() - pose_yaw(ego_pose);
  b.cos_yaw = std::cos(yaw);
  b.sin_yaw = std::sin(yaw);
  const Vec3 v = inv.rotate(Vec3(world_box.vx, world_box.vy, 0.0));
  b.vx = v.x();
  b.vy = v.y();
  return b;
}

bool box_contains(const Box3D& box, const Vec3& p) {
  const Vec3 l = local_of(box, p);
  return std::abs(l.x()) <= 0.5 * box.l && std::abs(l.y()) <= 0.5 * box.w &&
         std::abs(l.z()) <= 0.5 * box.h;
}

std::optional<double> ray_box_hit(const Vec3& origin, const Vec3& dir, const Box3D& box) {
  const Vec3 o = local_of(box, origin);
  const Vec3 d(box.cos_yaw * dir.x() + box.sin_yaw * dir.y(),
               -box.sin_yaw * dir.x() + box.cos_yaw * dir.y(), dir.z());
  const double half[3] = {0.5 * box.l, 0.5 * box.w, 0.5 * box.h};
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double ta = (-half[a] - o[a]) / d[a];
    double tb = (half[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t1 <= 0.0) return std::nullopt;
  return t0 > 0.0 ? t0 : t1;
}

// ---------------------------------------------------------------------------

std::vector<RadarPoint> simulate_radar_points(const Scene& scene, std::size_t t,
                                              std::size_t radar_idx, std::vector<int>* sources) {
  if (t >= scene.ego.size()) throw std::out_of_range("simulate_radar_points: frame out of range");
  if (radar_idx >= scene.rig.radars.size()) {
    throw std::out_of_range("simulate_radar_points: radar index out of range");
  }
  const SynthConfig& cfg = scene.config;
  const Pose& r2e = scene.rig.radars[radar_idx].radar_to_ego;
  const Pose e2r = r2e.inverse();
  const EgoState& ego = scene.ego[t];
  const Vec3 v_ego_r = e2r.rotate(ego.velocity);
  CounterRng rng(scene.seed, stream_id("radar", t, radar_idx));

  std::vector<RadarPoint> points;
  if (sources) sources->clear();
  auto emit = [&](const Vec3& p_ego, const Vec3& v_obj_ego, double base_power, int source) {
    const Vec3 p = e2r.apply(p_ego);
    const double r = p.norm();
    if (p.x() < 0.1 || r > 120.0) return;
    const Vec3 los = p / r;
    const double v_rel = (e2r.rotate(v_obj_ego) - v_ego_r).dot(los);
    RadarPoint pt;
    pt.x = p.x();
    pt.y = p.y();
    pt.z = p.z();
    pt.v_rel = v_rel;
    pt.power = base_power + rng.uniform(0.0, 5.0);
    pt.snr = pt.power - 10.0 * std::log10(1.0 + r);
    if (cfg.jitter > 0.0) {
      pt.x += cfg.jitter * rng.normal();
      pt.y += cfg.jitter * rng.normal();
      pt.z += cfg.jitter * rng.normal();
      pt.v_rel += 0.1 * cfg.jitter * rng.normal();
    }
    points.push_back(pt);
    if (sources) sources->push_back(source);
  };

  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    const Box3D b = to_ego(object_at(scene, scene.objects[o], t), ego.pose);
    const Vec3 v(b.vx, b.vy, 0.0);
    for (std::size_t i = 0; i < cfg.points_per_object; ++i) {
      emit(sample_surface(b, rng), v, 15.0 + 5.0 * static_cast<double>(b.label),
           static_cast<int>(o));
    }
  }
  for (const auto& st : scene.statics) {
    const Box3D b = to_ego(st.box, ego.pose);
    for (std::size_t i = 0; i < cfg.wall_points; ++i) {
      emit(sample_surface(b, rng), Vec3::Zero(), 12.0, -1);
    }
  }
  for (std::size_t i = 0; i < cfg.ground_points; ++i) {
    const Vec3 g(rng.uniform(scene.bounds.x.min, scene.bounds.x.max),
                 rng.uniform(scene.bounds.y.min, scene.bounds.y.max), 0.0);
    emit(g, Vec3::Zero(), 5.0, -1);
  }
  return points;
}

RadarSweep simulate_radar_sweep(const Scene& scene, std::size_t t, std::size_t radar_idx,
                                std::size_t current) {
  if (current >= scene.ego.size()) {
    throw std::out_of_range("simulate_radar_sweep: current frame out of range");
  }
  RadarSweep sweep;
  sweep.points = simulate_radar_points(scene, t, radar_idx);
  sweep.radar_to_ego = scene.rig.radars[radar_idx].radar_to_ego;
  sweep.ego_velocity = scene.ego[t].velocity;
  sweep.sweep_to_current = scene.ego[current].pose.inverse() * scene.ego[t].pose;
  sweep.timestamp = scene.ego[t].timestamp;
  return sweep;
}

Vec3 expected_compensated_velocity(const Scene& scene, std::size_t t, std::size_t radar_idx,
                                   std::size_t current, const RadarPoint& point,
                                   const Vec3& world_velocity) {
  const Pose& r2e = scene.rig.radars[radar_idx].radar_to_ego;
  const Pose& ego_t = scene.ego[t].pose;
  const Vec3 v_radar = r2e.rotation.transpose() * (ego_t.rotation.transpose() * world_velocity);
  const Vec3 p(point.x, point.y, point.z);
  const double n = p.norm();
  if (!(n > 0.0)) return Vec3::Zero();
  const Vec3 u = p / n;
  const double radial = v_radar.dot(u);
  const Vec3 planar(radial * u.x(), radial * u.y(), 0.0);
  const Pose to_current = scene.ego[current].pose.inverse() * ego_t;
  return to_current.rotation * (r2e.rotation * planar);
}

// ---------------------------------------------------------------------------

std::vector<double> feature_encoding(int occ_label, int instance, std::size_t channels) {
  std::vector<double> e(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double k = static_cast<double>(c + 1);
    e[c] = std::cos(0.61 * static_cast<double>(occ_label + 1) * k) +
           0.25 * std::sin(0.43 * static_cast<double>(instance) * k);
  }
  return e;
}

Tensor render_camera_features(const Scene& scene, std::size_t t, std::size_t cam_idx,
                              std::size_t channels) {
  if (cam_idx >= scene.rig.cameras.size()) {
    throw std::out_of_range("render_camera_features: camera index out of range");
  }
  if (channels == 0) throw std::invalid_argument("render_camera_features: channels must be >= 1");
  const CameraModel& cam = scene.rig.cameras[cam_idx];
  const Pose& ego_pose = scene.ego.at(t).pose;

  struct Target {
    Box3D box;
    int label;
    int instance;
  };
  std::vector<Target> targets;
  for (const auto& obj : scene.objects) {
    const Box3D b = to_ego(object_at(scene, obj, t), ego_pose);
    targets.push_back({b, occ_label_for_class(b.label), obj.instance});
  }
  for (const auto& st : scene.statics) targets.push_back({to_ego(st.box, ego_pose), st.occ_label, 0});

  const Pose cam_to_ego = cam.ego_to_cam.inverse();
  const Vec3 origin = cam_to_ego.translation;
  const Mat3 k_inv = cam.intrinsics.leftCols<3>().inverse();
  const std::vector<double> background = feature_encoding(kOccFree, 0, channels);
  const std::vector<double> ground = feature_encoding(8, 0, channels);
  std::vector<std::vector<double>> cache(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    cache[i] = feature_encoding(targets[i].label, targets[i].instance, channels);
  }

  Tensor out({channels, cam.feature_h, cam.feature_w});
  const std::size_t plane = cam.feature_h * cam.feature_w;
  for (std::size_t r = 0; r < cam.feature_h; ++r) {
    for (std::size_t c = 0; c < cam.feature_w; ++c) {
      const Vec3 pix(static_cast<double>(c * cam.stride), static_cast<double>(r * cam.stride), 1.0);
      const Vec3 dir = cam_to_ego.rotate(k_inv * pix);
      double best = std::numeric_limits<double>::infinity();
      const std::vector<double>* enc = &background;
      if (dir.z() < 0.0) {
        const double tg = -origin.z() / dir.z();
        if (tg > 0.0) {
          best = tg;
          enc = &ground;
        }
      }
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto hit = ray_box_hit(origin, dir, targets[i].box);
        if (hit && *hit < best) {
          best = *hit;
          enc = &cache[i];
        }
      }
      for (std::size_t ch = 0; ch < channels; ++ch) out[ch * plane + r * cam.feature_w + c] = (*enc)[ch];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Tensor footprint_mask(const BoxSet& boxes, const RefGrid2D& grid) {
  Tensor mask({grid.extent.h, grid.extent.w});
  for (std::size_t i = 0; i < grid.extent.h; ++i) {
    for (std::size_t j = 0; j < grid.extent.w; ++j) {
      Vec3 c = grid.center(i, j);
      for (const auto& b : boxes) {
        c.z() = b.z;
        if (box_contains(b, c)) {
          mask.at(i, j) = 1.0;
          break;
        }
      }
    }
  }
  return mask;
}

std::vector<int> occupancy_labels_for(const BoxSet& ego_boxes, const std::vector<Box3D>& statics,
                                      const std::vector<int>& static_labels,
                                      const RefGrid3D& grid) {
  if (statics.size() != static_labels.size()) {
    throw std::invalid_argument("occupancy_labels_for: statics and labels differ in length");
  }
  const Extent3 e = grid.extent;
  std::vector<int> labels(grid.cell_count(), kOccFree);
  const double dz = grid.cell_z();
  const double kg = std::ceil((0.0 - grid.bounds.z.min) / dz) - 1.0;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < e.h; ++i) {
    for (std::size_t j = 0; j < e.w; ++j) {
      for (std::size_t k = 0; k < e.z; ++k, ++idx) {
        const Vec3 c = grid.center(i, j, k);
        int label = kOccFree;
        if (kg >= 0.0 && static_cast<double>(k) == kg) label = 8;
        for (std::size_t s = 0; s < statics.size(); ++s) {
          if (box_contains(statics[s], c)) label = static_labels[s];
        }
        for (const auto& b : ego_boxes) {
          if (box_contains(b, c)) {
            label = occ_label_for_class(b.label);
            break;
          }
        }
        labels[idx] = label;
      }
    }
  }
  return labels;
}

GroundTruth make_ground_truth(BoxSet boxes, std::vector<int> occ, const RefGrid3D& occ_grid) {
  if (occ.size() != occ_grid.cell_count()) {
    throw std::invalid_argument("make_ground_truth: occupancy size does not match the grid");
  }
  GroundTruth gt;
  gt.occ_extent = occ_grid.extent;
  const Extent3 e = occ_grid.extent;
  gt.occ_mask = Tensor({e.h, e.w, e.z});
  for (std::size_t i = 0; i < occ.size(); ++i) gt.occ_mask[i] = occ[i] != kOccFree ? 1.0 : 0.0;
  const RefGrid2D bev{occ_grid.bounds.x, occ_grid.bounds.y, e.bev()};
  gt.bev_mask = footprint_mask(boxes, bev);
  gt.boxes = std::move(boxes);
  gt.occ = std::move(occ);
  return gt;
}

GroundTruth rasterize_gt(const Scene& scene, std::size_t t, const RefGrid3D& occ_grid) {
  const Pose& ego_pose = scene.ego.at(t).pose;
  BoxSet all;
  for (const auto& obj : scene.objects) all.push_back(to_ego(object_at(scene, obj, t), ego_pose));
  std::vector<Box3D> statics;
  std::vector<int> labels;
  for (const auto& st : scene.statics) {
    statics.push_back(to_ego(st.box, ego_pose));
    labels.push_back(st.occ_label);
  }
  std::vector<int> occ = occupancy_labels_for(all, statics, labels, occ_grid);
  BoxSet boxes;
  for (const auto& b : all) {
    if (occ_grid.bounds.x.contains(b.x) && occ_grid.bounds.y.contains(b.y)) boxes.push_back(b);
  }
  return make_ground_truth(std::move(boxes), std::move(occ), occ_grid);
}

}  // namespace radocc
