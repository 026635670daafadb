// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "radocc/config.hpp"
#include "radocc/deform_attn.hpp"
#include "radocc/losses.hpp"
#include "radocc/matching.hpp"
#include "radocc/metrics.hpp"
#include "radocc/pipeline.hpp"
#include "radocc/radar.hpp"
#include "radocc/synthscene.hpp"
#include "radocc/temporal.hpp"
#include "radocc/view_transform.hpp"

using namespace radocc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome ods_cross_check() {
  const double ours = 100.0 * ods(0.3912, 0.6646, 0.2331, 0.3545, 0.6151);
  const double bevfusion = 100.0 * ods(0.3395, 0.5730, 0.2165, 0.3814, 0.7474);
  const bool ok = std::abs(ours - 46.22) <= 0.01 && std::abs(bevfusion - 43.00) <= 0.01;
  return {ok, fmt("ODS %.4f", ours) + fmt(" / %.4f", bevfusion) + " (want 46.22 / 43.00 +- 0.01)"};
}

// ---------------------------------------------------------------------------

Outcome radar_static_world() {
  const GridBounds bounds{{-60, 60}, {-40, 40}, {-3, 5}};
  double static_max = 0.0, dynamic_max = 0.0;
  std::size_t static_n = 0, dynamic_n = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthConfig cfg;
    cfg.frames = 3;
    cfg.radars = 6;
    cfg.jitter = 0.0;
    const Scene scene = generate_scene(1000 + seed, cfg, bounds);
    const std::size_t cur = cfg.frames - 1;
    for (std::size_t r = 0; r < scene.rig.radars.size(); ++r) {
      std::vector<RadarSweep> sweeps;
      std::vector<std::vector<int>> sources;
      for (std::size_t t = 0; t < cfg.frames; ++t) {
        sweeps.push_back(simulate_radar_sweep(scene, t, r, cur));
        std::vector<int> src;
        simulate_radar_points(scene, t, r, &src);
        sources.push_back(std::move(src));
      }
      const AccumulatedCloud cloud = compensate_and_accumulate(sweeps);
      std::size_t k = 0;
      for (std::size_t t = 0; t < sweeps.size(); ++t) {
        for (std::size_t i = 0; i < sources[t].size(); ++i) {
          const CloudPoint& p = cloud.points.at(k++);
          const int src = sources[t][i];
          Vec3 v_world = Vec3::Zero();
          if (src >= 0) {
            const Box3D& b = scene.objects[static_cast<std::size_t>(src)].box;
            v_world = Vec3(b.vx, b.vy, 0.0);
          }
          if (v_world.norm() == 0.0) {
            static_max = std::max(static_max, std::hypot(p.vx, p.vy));
            ++static_n;
          } else {
            const Vec3 want =
                expected_compensated_velocity(scene, t, r, cur, sweeps[t].points[i], v_world);
            dynamic_max = std::max(dynamic_max, std::hypot(p.vx - want.x(), p.vy - want.y()));
            ++dynamic_n;
          }
        }
      }
      if (k != cloud.points.size()) return {false, "point bookkeeping mismatch"};
    }
  }
  const bool ok = static_n > 0 && dynamic_n > 0 && static_max < 1e-6 && dynamic_max < 1e-6;
  std::ostringstream os;
  os << "100 scenes, " << static_n << " static pts max |v| " << fmt("%.3g", static_max) << ", "
     << dynamic_n << " dynamic pts max err " << fmt("%.3g", dynamic_max) << " (< 1e-6)";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

const GridBounds kTempBounds{{-12, 12}, {-8, 8}, {-2, 2}};

// Features of a static world: every cell stores f(world position of its center).
template <typename Grid, typename F>
Tensor observe(const Grid& g, const Pose& ego, const F& f, std::size_t channels, Shape shape) {
  Tensor t(std::move(shape));
  const auto centers = g.centers();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < centers.size(); ++i) t[c * centers.size() + i] = f(ego.apply(centers[i]), c);
  return t;
}

struct AlignStats {
  double worst = 0.0;
  double worst_ratio = 0.0;  // error / bound, fractional case
  std::size_t cells = 0;
};

Outcome temporal_identity() {
  const RefGrid3D vg = make_ref_grid_3d(kTempBounds, {16, 24, 4});
  const RefGrid2D bg = make_ref_grid_2d(kTempBounds, {16, 24});
  const std::size_t C = 3, T = 3;
  auto rough = [](const Vec3& p, std::size_t c) {
    return std::sin(2.3 * p.x() + c) * std::cos(1.9 * p.y()) + 0.3 * p.z() + 0.1 * c;
  };

  // Lattice-aligned motion: integer-meter translations and quarter turns.
  AlignStats lattice;
  CounterRng rng(7, "temporal-acceptance");
  for (int trial = 0; trial < 20; ++trial) {
    TemporalBuffer buf(T - 1);
    Pose pose;
    std::vector<Pose> poses;
    for (std::size_t t = 0; t < T; ++t) {
      const double yaw = std::numbers::pi / 2 * static_cast<double>(rng.below(4));
      pose = Pose::from_yaw(yaw, Vec3(static_cast<double>(rng.below(5)) - 2.0,
                                      static_cast<double>(rng.below(5)) - 2.0, 0.0));
      poses.push_back(pose);
      if (t + 1 < T) {
        buf.push({observe(vg, pose, rough, C, {C, 16, 24, 4}), observe(bg, pose, rough, C, {C, 16, 24}),
                  pose});
      }
    }
    const Pose& cur = poses.back();
    const Tensor want_v = observe(vg, cur, rough, C, {C, 16, 24, 4});
    const Tensor want_b = observe(bg, cur, rough, C, {C, 16, 24});
    for (std::size_t h = 0; h < buf.size(); ++h) {
      const Tensor av = align_history_voxel(buf[h].voxel, vg, cur, buf[h].pose);
      const Tensor ab = align_history_bev(buf[h].bev, bg, cur, buf[h].pose);
      const Pose rel = buf[h].pose.inverse() * cur;
      const std::size_t vcells = vg.cell_count(), bcells = 16 * 24;
      for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 24; ++j) {
          const Point3 q = vg.to_grid(rel.apply(vg.center(i, j, 0)));
          if (q.x < -1e-9 || q.y < -1e-9 || q.x > 23 + 1e-9 || q.y > 15 + 1e-9) continue;
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t bi = c * bcells + i * 24 + j;
            lattice.worst = std::max(lattice.worst, std::abs(ab[bi] - want_b[bi]));
            for (std::size_t k = 0; k < 4; ++k) {
              const std::size_t vi = c * vcells + (i * 24 + j) * 4 + k;
              lattice.worst = std::max(lattice.worst, std::abs(av[vi] - want_v[vi]));
            }
          }
          ++lattice.cells;
        }
    }
  }

  // Fractional motion: synthetic ego trajectories against the multilinear
  // interpolation bound of a smooth field.
  AlignStats frac;
  const double kx = 0.35, ky = 0.45, kz = 0.5;
  auto smooth = [&](const Vec3& p, std::size_t) {
    return std::sin(kx * p.x()) * std::cos(ky * p.y()) * std::cos(kz * p.z());
  };
  SynthConfig sc;
  sc.frames = T;
  sc.max_ego_speed = 3.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene scene = generate_scene(500 + seed, sc, kTempBounds);
    const Pose& cur = scene.ego[T - 1].pose;
    const Tensor want = observe(vg, cur, smooth, 1, {1, 16, 24, 4});
    for (std::size_t h = 0; h + 1 < T; ++h) {
      const Pose& hp = scene.ego[h].pose;
      const Tensor hist = observe(vg, hp, smooth, 1, {1, 16, 24, 4});
      const Tensor got = align_history_voxel(hist, vg, cur, hp);
      const double th = std::atan2(hp.rotation(1, 0), hp.rotation(0, 0));
      const double mxx = std::pow(kx * std::abs(std::cos(th)) + ky * std::abs(std::sin(th)), 2);
      const double myy = std::pow(kx * std::abs(std::sin(th)) + ky * std::abs(std::cos(th)), 2);
      const double bound = 0.125 * (vg.cell_x() * vg.cell_x() * mxx + vg.cell_y() * vg.cell_y() * myy +
                                    vg.cell_z() * vg.cell_z() * kz * kz);
      const Pose rel = hp.inverse() * cur;
      std::size_t idx = 0;
      for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 24; ++j)
          for (std::size_t k = 0; k < 4; ++k, ++idx) {
            const Point3 q = vg.to_grid(rel.apply(vg.center(i, j, k)));
            if (q.x < 0 || q.y < 0 || q.z < 0 || q.x > 23 || q.y > 15 || q.z > 3) continue;
            const double err = std::abs(got[idx] - want[idx]);
            frac.worst = std::max(frac.worst, err);
            frac.worst_ratio = std::max(frac.worst_ratio, err / bound);
            ++frac.cells;
          }
    }
  }
  const bool ok = lattice.cells > 0 && frac.cells > 0 && lattice.worst < 1e-9 && frac.worst_ratio < 1.0;
  std::ostringstream os;
  os << "T=3, lattice max diff " << fmt("%.3g", lattice.worst) << " over " << lattice.cells
     << " columns; fractional max err/bound " << fmt("%.3f", frac.worst_ratio) << " over " << frac.cells
     << " voxels";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  CounterRng rng(17, "gradients");
  const double h = 1e-6;
  auto uni = [&](std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
  };
  auto bin = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform() < 0.35 ? 1.0 : 0.0;
    return v;
  };
  auto labels = [&](std::size_t n, std::size_t k) {
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(rng.below(k));
    return v;
  };
  struct Worst {
    const char* name;
    double err = 0.0;
  };
  std::vector<Worst> worst{{"focal"}, {"l1"}, {"ce"}, {"scal_geo"}, {"scal_sem"}, {"bce"}, {"dice"}};

  for (int trial = 0; trial < 100; ++trial) {
    const auto p = uni(16, 0.02, 0.98);
    const auto t = bin(16);
    auto check_vec = [&](std::size_t slot, const std::function<LossValue(const std::vector<double>&)>& f,
                         const std::vector<double>& x) {
      const auto num = oracle::fd_gradient([&](const std::vector<double>& y) { return f(y).value; }, x, h);
      worst[slot].err = std::max(worst[slot].err, oracle::relative_error(f(x).grad, num));
    };
    check_vec(0, [&](const std::vector<double>& x) { return focal_loss(x, t); }, p);
    auto a = uni(20, -3, 3);
    const auto b = uni(20, -3, 3);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) < 1e-4) a[i] += 1e-3;
    check_vec(1, [&](const std::vector<double>& x) { return l1_loss(x, b, 2); }, a);
    check_vec(5, [&](const std::vector<double>& x) { return bce_loss(x, t); }, p);
    check_vec(6, [&](const std::vector<double>& x) { return dice_loss(x, t); }, p);

    const Shape zs{kNumOccClasses, 2, 3, 4};
    const auto z = uni(shape_volume(zs), -3, 3);
    const auto lab = labels(24, kNumOccClasses);
    auto check_logits = [&](std::size_t slot, LossValue (*f)(const Tensor&, std::span<const int>)) {
      check_vec(slot, [&](const std::vector<double>& x) { return f(Tensor(zs, x), lab); }, z);
    };
    check_logits(2, cross_entropy);
    check_logits(3, scal_geo);
    check_logits(4, scal_sem);
  }
  bool ok = true;
  std::ostringstream os;
  os << "100 points each, max rel err:";
  for (const auto& w : worst) {
    ok = ok && w.err < 1e-4;
    os << ' ' << w.name << '=' << fmt("%.2g", w.err);
  }
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

Outcome hungarian_oracle() {
  CounterRng rng(23, "hungarian");
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const std::size_t m = n + rng.below(7 - n);
    Tensor c({n, m});
    const bool ties = trial % 2 == 0;
    for (auto& v : c.data()) v = ties ? std::floor(rng.uniform(0, 4)) : rng.uniform(-5, 5);
    const Assignment a = solve_assignment(c);
    const auto best = oracle::brute_force_assignment(c);
    double sum = 0.0;
    std::vector<bool> used(m, false);
    bool valid = a.row_to_col.size() == n;
    for (std::size_t r = 0; valid && r < n; ++r) {
      const std::size_t col = a.row_to_col[r];
      valid = col < m && !used[col];
      if (valid) {
        used[col] = true;
        sum += c.at(r, col);
      }
    }
    if (!valid || a.cost != best.cost || sum != a.cost) ++mismatches;
  }
  return {mismatches == 0, "1000 matrices n<=6, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------

Outcome attention_normalization() {
  CounterRng rng(29, "attention");
  const auto p2 = DeformAttnParams::seeded(32, 8, 4, 2, rng);
  const auto p3 = DeformAttnParams::seeded(32, 8, 4, 3, rng);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> q(32);
    const double scale = i % 2 ? 1.0 : 50.0;
    for (auto& x : q) x = rng.uniform(-scale, scale);
    for (const auto* p : {&p2, &p3}) {
      const auto w = attention_weights(q, *p);
      for (std::size_t h = 0; h < p->heads; ++h) {
        double s = 0.0;
        for (std::size_t k = 0; k < p->points; ++k) {
          if (!(w[h * p->points + k] >= 0.0)) worst = 1.0;
          s += w[h * p->points + k];
        }
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
  }

  // Degenerate configuration: identity projections, zero offsets, one point.
  std::size_t exact_fail = 0;
  const Tensor v2 = oracle::random_tensor({8, 6, 7}, rng);
  const Tensor v3 = oracle::random_tensor({8, 5, 6, 3}, rng);
  const auto d2 = DeformAttnParams::degenerate(8, 2, 1, 2);
  const auto d3 = DeformAttnParams::degenerate(8, 4, 1, 3);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> q(8);
    for (auto& x : q) x = rng.uniform(-3, 3);
    const Point2 r2{rng.uniform(-1, 7), rng.uniform(-1, 6)};
    const Point3 r3{rng.uniform(-1, 6), rng.uniform(-1, 5), rng.uniform(-1, 3)};
    const Tensor s2 = bilinear_sample(v2, std::span(&r2, 1));
    const Tensor s3 = trilinear_sample(v3, std::span(&r3, 1));
    const auto o2 = deform_attn_2d(q, r2, v2, d2);
    const auto o3 = deform_attn_3d(q, r3, v3, d3);
    for (std::size_t c = 0; c < 8; ++c) {
      exact_fail += o2[c] != s2.at(c, 0);
      exact_fail += o3[c] != s3.at(c, 0);
    }
  }
  const bool ok = worst <= 1e-9 && exact_fail == 0;
  std::ostringstream os;
  os << "10^4 queries max |sum-1| " << fmt("%.3g", worst) << "; degenerate closed form "
     << exact_fail << " inexact of 8000";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

Outcome cvqg_correctness() {
  const GridBounds bounds{{-30, 30}, {-20, 20}, {-2, 4}};
  const RefGrid3D grid = make_ref_grid_3d(bounds, {20, 30, 6});
  CounterRng rng(31, "cvqg");
  auto cam = [](std::string name, double yaw, Vec3 pos, double f) {
    return CameraModel::pinhole(std::move(name), f, f, 40, 24, 48, 80, 4, camera_pose_looking(yaw, pos));
  };
  std::vector<std::vector<CameraModel>> rigs{
      {cam("front", 0.0, Vec3(1, 0, 1.5), 40)},
      {cam("a", 0.0, Vec3(1, 0, 1.5), 40), cam("b", 2.1, Vec3(0, 1, 1.5), 30),
       cam("c", -2.1, Vec3(0, -1, 1.5), 60)},
  };
  std::vector<CameraModel> ring;
  for (int i = 0; i < 6; ++i) ring.push_back(cam("r" + std::to_string(i), i * std::numbers::pi / 3, Vec3(0, 0, 1.6), 50));
  rigs.push_back(ring);

  std::size_t mismatches = 0, covered_total = 0, uncovered_total = 0;
  const auto centers = grid.centers();
  const std::size_t cells = centers.size();
  for (const auto& rig : rigs) {
    std::vector<Tensor> feats;
    for (const auto& c : rig) {
      Tensor f({4, c.feature_h, c.feature_w});
      for (auto& x : f.data()) x = rng.uniform(0.1, 2.0);
      feats.push_back(std::move(f));
    }
    const VoxelQueries q = cvqg_image_branch(feats, rig, grid);
    for (std::size_t i = 0; i < cells; ++i) {
      bool seen = false;
      for (const auto& c : rig) seen = seen || oracle::project(centers[i], c).valid;
      bool zero = true;
      for (std::size_t ch = 0; ch < 4; ++ch) zero = zero && q.features[ch * cells + i] == 0.0;
      mismatches += zero == seen;
      (seen ? covered_total : uncovered_total) += 1;
    }
  }

  // Two overlapping cameras with constant features 1 and 2.
  const std::vector<CameraModel> pair{cam("left", 0.35, Vec3(0, 0, 1.5), 40), cam("right", -0.35, Vec3(0, 0, 1.5), 40)};
  const std::vector<Tensor> consts{Tensor({2, pair[0].feature_h, pair[0].feature_w}, 1.0),
                                   Tensor({2, pair[1].feature_h, pair[1].feature_w}, 2.0)};
  const VoxelQueries q = cvqg_image_branch(consts, pair, grid);
  std::size_t overlap = 0, overlap_bad = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    const bool a = oracle::project(centers[i], pair[0]).valid;
    const bool b = oracle::project(centers[i], pair[1]).valid;
    const double want = b ? 2.0 : (a ? 1.0 : 0.0);
    overlap += a && b;
    overlap_bad += q.features[i] != want || q.features[cells + i] != want;
  }
  const bool ok = mismatches == 0 && covered_total > 0 && uncovered_total > 0 && overlap > 0 &&
                  overlap_bad == 0;
  std::ostringstream os;
  os << rigs.size() << " rigs, " << covered_total << " covered / " << uncovered_total
     << " uncovered voxels, " << mismatches << " zero-set mismatches; overlap fixture " << overlap
     << " shared voxels, " << overlap_bad << " wrong";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

// Brute-force AP: explicit selection order, TP/FP counted from scratch at every rank.
std::optional<double> oracle_ap(const std::vector<DetFrame>& frames, int label, double thr) {
  struct Det {
    double score;
    std::size_t frame, idx;
    bool tp;
  };
  std::vector<Det> dets;
  std::size_t gts = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<const Box3D*> p, g;
    for (const auto& b : frames[f].preds)
      if (b.label == label) p.push_back(&b);
    for (const auto& b : frames[f].gts)
      if (b.label == label) g.push_back(&b);
    gts += g.size();
    std::vector<bool> done(p.size(), false), taken(g.size(), false), tp(p.size(), false);
    for (std::size_t step = 0; step < p.size(); ++step) {
      std::size_t pick = p.size();
      for (std::size_t i = 0; i < p.size(); ++i)
        if (!done[i] && (pick == p.size() || p[i]->score > p[pick]->score)) pick = i;
      done[pick] = true;
      std::size_t best = g.size();
      double best_d = thr;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (taken[j]) continue;
        const double d = std::hypot(p[pick]->x - g[j]->x, p[pick]->y - g[j]->y);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (best < g.size()) {
        taken[best] = true;
        tp[pick] = true;
      }
    }
    for (std::size_t i = 0; i < p.size(); ++i) dets.push_back({p[i]->score, f, i, tp[i]});
  }
  if (gts == 0) return std::nullopt;
  std::vector<bool> used(dets.size(), false);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < dets.size(); ++s) {
    std::size_t pick = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (used[i]) continue;
      if (pick == dets.size() || dets[i].score > dets[pick].score) pick = i;
    }
    used[pick] = true;
    order.push_back(pick);
  }
  if (order.empty()) return 0.0;
  double area = 0.0, r0 = 0.0, p0 = -1.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t tp = 0;
    for (std::size_t j = 0; j <= k; ++j) tp += dets[order[j]].tp;
    const double recall = static_cast<double>(tp) / static_cast<double>(gts);
    const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    if (p0 < 0.0) p0 = precision;
    area += (recall - r0) * 0.5 * (precision + p0);
    r0 = recall;
    p0 = precision;
  }
  return std::clamp(area, 0.0, 1.0);
}

Outcome metric_oracles() {
  CounterRng rng(37, "metrics");
  const std::vector<double> thresholds{0.5, 1.0, 2.0, 4.0};
  std::vector<DetFrame> frames(50);
  std::vector<int> occ_pred, occ_gt;
  std::size_t iou_bad = 0;
  for (auto& f : frames) {
    const std::size_t ng = rng.below(5), np = rng.below(7);
    for (std::size_t i = 0; i < ng; ++i) {
      Box3D b;
      b.x = rng.uniform(0, 12);
      b.y = rng.uniform(0, 12);
      b.label = static_cast<int>(rng.below(kNumDetClasses));
      f.gts.push_back(b);
    }
    for (std::size_t i = 0; i < np; ++i) {
      Box3D b;
      if (!f.gts.empty() && rng.uniform() < 0.6) {
        b = f.gts[rng.below(f.gts.size())];
        b.x += rng.uniform(-2, 2);
        b.y += rng.uniform(-2, 2);
      } else {
        b.x = rng.uniform(0, 12);
        b.y = rng.uniform(0, 12);
        b.label = static_cast<int>(rng.below(kNumDetClasses));
      }
      // Coarse scores force ties.
      b.score = std::floor(rng.uniform(0, 8)) / 8.0;
      f.preds.push_back(b);
    }

    // Small occupancy frame, checked on its own and accumulated.
    std::vector<int> p(48), g(48);
    for (std::size_t i = 0; i < 48; ++i) {
      g[i] = rng.uniform() < 0.5 ? 0 : static_cast<int>(rng.below(kNumOccClasses));
      p[i] = rng.uniform() < 0.6 ? g[i] : static_cast<int>(rng.below(kNumOccClasses));
    }
    const OccEval e = occupancy_iou(p, g);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 1; c < kNumOccClasses; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < 48; ++i) {
        const bool pc = p[i] == static_cast<int>(c), gc = g[i] == static_cast<int>(c);
        tp += pc && gc;
        fp += pc && !gc;
        fn += !pc && gc;
      }
      if (tp + fp + fn == 0) {
        iou_bad += e.iou[c].has_value();
        continue;
      }
      const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      iou_bad += !e.iou[c] || *e.iou[c] != iou;
      sum += iou;
      ++n;
    }
    const double miou = n ? sum / static_cast<double>(n) : 1.0;
    iou_bad += e.miou != miou;
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < 48; ++i) {
      inter += p[i] != 0 && g[i] != 0;
      uni += p[i] != 0 || g[i] != 0;
    }
    iou_bad += e.sc_iou != (uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0);
    occ_pred.insert(occ_pred.end(), p.begin(), p.end());
    occ_gt.insert(occ_gt.end(), g.begin(), g.end());
  }

  const DetEval ev = evaluate_detection(frames, thresholds);
  std::size_t ap_bad = 0;
  double map_sum = 0.0;
  std::size_t map_n = 0;
  for (std::size_t c = 0; c < kNumDetClasses; ++c) {
    double s = 0.0;
    bool any = false;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const auto want = oracle_ap(frames, static_cast<int>(c), thresholds[t]);
      const auto& got = ev.ap[c][t];
      ap_bad += want.has_value() != got.has_value() || (want && *want != *got);
      if (want) {
        any = true;
        s += *want;
      }
    }
    if (any) {
      map_sum += s / static_cast<double>(thresholds.size());
      ++map_n;
    }
  }
  const double map = map_n ? map_sum / static_cast<double>(map_n) : 0.0;
  ap_bad += ev.map != map;

  // Concentric boxes: same center and yaw, half the extent on every axis.
  Box3D gt;
  gt.l = 4.0;
  gt.w = 2.0;
  gt.h = 1.6;
  Box3D pred = gt;
  pred.l = 2.0;
  pred.w = 1.0;
  pred.h = 0.8;
  std::vector<DetFrame> concentric(1);
  concentric[0].gts = {gt};
  concentric[0].preds = {pred};
  const DetEval ce = evaluate_detection(concentric, thresholds);
  const bool mase_ok = std::abs(ce.mase - 0.875) < 1e-12;

  const bool ok = ap_bad == 0 && iou_bad == 0 && mase_ok;
  std::ostringstream os;
  os << "50 frames: " << ap_bad << " AP/mAP mismatches (mAP " << fmt("%.4f", ev.map) << "), "
     << iou_bad << " IoU/mIoU mismatches; concentric mASE " << fmt("%.6f", ce.mase);
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

Outcome desk_end_to_end() {
  PipelineConfig cfg = PipelineConfig::desk();
  cfg.frames = 2;
  cfg.seed = 11;
  cfg.validate();
  if (cfg.voxel != Extent3{20, 30, 4} || cfg.bev != Extent2{40, 60} || cfg.synth.cameras != 2) {
    return {false, "desk config does not match the required extents"};
  }
  auto run = [&] {
    const Scene s = generate_scene(cfg.seed, cfg.synth, cfg.bounds);
    return run_pipeline(cfg, materialize_scene(s, cfg.channels, cfg.occ_grid()));
  };
  const RunResult a = run();
  const RunResult b = run();
  const std::size_t C = cfg.channels, CR = cfg.radar_channels;
  const std::size_t hc = cfg.synth.image_h / cfg.synth.stride, wc = cfg.synth.image_w / cfg.synth.stride;
  const Extent3 v = cfg.voxel, o = cfg.occ;
  const std::vector<Shape> declared{
      {CR, cfg.bev.h, cfg.bev.w},  {C, hc, wc},          {C, v.h, v.w, v.z},  {C, v.h, v.w, v.z},
      {C, v.h, v.w, v.z},          {CR, cfg.bev.h, cfg.bev.w}, {C, o.h, o.w, o.z}, {C, o.h, o.w},
      {o.h, o.w, o.z},             {o.h, o.w},           {kNumOccClasses, o.h, o.w, o.z}};
  std::size_t bad_shapes = 0;
  for (std::size_t i = 0; i < declared.size(); ++i) {
    if (i >= a.last_shapes.size() || a.last_shapes[i] != declared[i]) {
      ++bad_shapes;
      std::fprintf(stderr, "  shape mismatch for %s\n", std::string(kDumpStages[i]).c_str());
    }
  }
  const bool identical = a.report_json == b.report_json && a.pr_csv == b.pr_csv;
  const bool ok = bad_shapes == 0 && identical && !a.report_json.empty();
  std::ostringstream os;
  os << "desk 20x30x4 / 40x60, 2 cameras, T=2: " << bad_shapes << " shape violations, report "
     << (identical ? "bitwise identical" : "DIFFERS") << " across runs (" << a.report_json.size()
     << " bytes)";
  return {ok, os.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"ods_arithmetic", ods_cross_check},
      {"radar_static_world", radar_static_world},
      {"temporal_alignment_identity", temporal_identity},
      {"loss_gradients", gradient_suite},
      {"hungarian_oracle", hungarian_oracle},
      {"attention_normalization", attention_normalization},
      {"cvqg_coverage", cvqg_correctness},
      {"metric_oracles", metric_oracles},
      {"desk_end_to_end", desk_end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %-28s %s [%.2fs]\n", out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
