#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <vector>

#include "oracles.hpp"
#include "radocc/temporal.hpp"

using namespace radocc;

namespace {

const GridBounds kBounds{{-12, 12}, {-8, 8}, {-2, 2}};

using Field = std::function<double(const Vec3&, std::size_t)>;

Tensor sample_voxel(const RefGrid3D& g, const Pose& ego, const Field& f, std::size_t c) {
  Tensor t({c, g.extent.h, g.extent.w, g.extent.z});
  const auto centers = g.centers();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < centers.size(); ++i)
      t[ch * centers.size() + i] = f(ego.apply(centers[i]), ch);
  return t;
}

Tensor sample_bev(const RefGrid2D& g, const Pose& ego, const Field& f, std::size_t c) {
  Tensor t({c, g.extent.h, g.extent.w});
  const auto centers = g.centers();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < centers.size(); ++i)
      t[ch * centers.size() + i] = f(ego.apply(centers[i]), ch);
  return t;
}

double random_field(const Vec3& p, std::size_t ch) {
  return std::sin(1.7 * p.x() + 0.3 * ch) * std::cos(0.9 * p.y()) + 0.1 * p.z() * (ch + 1);
}

}  // namespace

TEST_CASE("lattice-aligned motion aligns history exactly") {
  const RefGrid3D g = make_ref_grid_3d(kBounds, {16, 24, 4});
  const Pose hist = Pose::from_yaw(0.0, Vec3(5, -2, 0));
  const Pose cur = Pose::from_yaw(0.0, Vec3(8, 1, 0));
  const Tensor h = sample_voxel(g, hist, random_field, 3);
  const Tensor want = sample_voxel(g, cur, random_field, 3);
  const Tensor got = align_history_voxel(h, g, cur, hist);
  const std::size_t cells = g.cell_count();
  std::size_t interior = 0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 24; ++j)
      for (std::size_t k = 0; k < 4; ++k) {
        if (j + 3 >= 24 || i + 3 >= 16) {
          CHECK(got.at(0, i, j, k) == 0.0);
          continue;
        }
        ++interior;
        for (std::size_t c = 0; c < 3; ++c)
          CHECK(std::abs(got.at(c, i, j, k) - want.at(c, i, j, k)) < 1e-9);
      }
  CHECK(interior > cells / 2);
}

TEST_CASE("half-turn about the origin is lattice aligned on a centered grid") {
  const RefGrid2D g = make_ref_grid_2d(kBounds, {16, 24});
  const Pose hist = Pose::identity();
  const Pose cur = Pose::from_yaw(std::numbers::pi);
  const Tensor h = sample_bev(g, hist, random_field, 2);
  const Tensor want = sample_bev(g, cur, random_field, 2);
  const Tensor got = align_history_bev(h, g, cur, hist);
  CHECK(max_abs_diff(got, want) < 1e-9);
}

TEST_CASE("fractional motion stays within the interpolation bound") {
  const RefGrid3D g = make_ref_grid_3d(kBounds, {16, 24, 4});
  const double kx = 0.4, ky = 0.3;
  const Field smooth = [&](const Vec3& p, std::size_t) { return std::sin(kx * p.x()) * std::cos(ky * p.y()); };
  const Pose hist = Pose::from_yaw(0.05, Vec3(0.37, -0.21, 0));
  const Pose cur = Pose::from_yaw(0.11, Vec3(1.13, 0.42, 0));
  const Tensor h = sample_voxel(g, hist, smooth, 1);
  const Tensor want = sample_voxel(g, cur, smooth, 1);
  const Tensor got = align_history_voxel(h, g, cur, hist);
  // Multilinear error <= (1/8) sum_i h_i^2 max|d^2 f / dx_i^2| along the history grid axes,
  // which are rotated by the history yaw against the field.
  const double th = 0.05;
  const double dxx = std::pow(kx * std::abs(std::cos(th)) + ky * std::abs(std::sin(th)), 2);
  const double dyy = std::pow(kx * std::abs(std::sin(th)) + ky * std::abs(std::cos(th)), 2);
  const double bound = 0.125 * (g.cell_x() * g.cell_x() * dxx + g.cell_y() * g.cell_y() * dyy);
  const Pose rel = hist.inverse() * cur;
  double worst = 0.0;
  std::size_t idx = 0, checked = 0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 24; ++j)
      for (std::size_t k = 0; k < 4; ++k, ++idx) {
        const Point3 q = g.to_grid(rel.apply(g.center(i, j, k)));
        if (q.x < 0 || q.y < 0 || q.x > 23 || q.y > 15) continue;
        ++checked;
        worst = std::max(worst, std::abs(got[idx] - want[idx]));
      }
  CHECK(checked > 200);
  CHECK(worst > 0.0);
  CHECK(worst < bound);
}

TEST_CASE("identity merge returns the most recent entry") {
  CounterRng rng(51, "merge");
  const Tensor a = oracle::random_tensor({4, 3, 5, 2}, rng);
  const Tensor b = oracle::random_tensor({4, 3, 5, 2}, rng);
  const HistoryMerge m = HistoryMerge::identity(3, 4, 2);
  const std::vector<Tensor> one{a}, two{a, b};
  CHECK(merge_history_voxel(one, m) == a);
  CHECK(merge_history_voxel(two, m) == a);
  const std::vector<Tensor> three{a, b, b};
  CHECK_THROWS_AS(merge_history_voxel(three, m), std::invalid_argument);
}

TEST_CASE("buffer is FIFO, most recent first, bounded") {
  TemporalBuffer buf(2);
  for (int i = 0; i < 3; ++i) buf.push({Tensor({1, 1, 1, 1}, i), Tensor({1, 1, 1}, i), Pose::identity()});
  CHECK(buf.size() == 2);
  CHECK(buf[0].voxel[0] == 2.0);
  CHECK(buf[1].voxel[0] == 1.0);
  buf.clear();
  CHECK(buf.empty());
  TemporalBuffer none(0);
  none.push({Tensor({1, 1, 1, 1}), Tensor({1, 1, 1}), Pose::identity()});
  CHECK(none.empty());
}

TEST_CASE("buffer save and load") {
  CounterRng rng(52, "bufio");
  TemporalBuffer buf(2);
  buf.push({oracle::random_tensor({2, 3, 4, 2}, rng), oracle::random_tensor({2, 3, 4}, rng),
            Pose::from_yaw(0.3, Vec3(1, 2, 0))});
  buf.push({oracle::random_tensor({2, 3, 4, 2}, rng), oracle::random_tensor({2, 3, 4}, rng),
            Pose::from_yaw(0.5, Vec3(2, 2, 0))});
  const auto dir = std::filesystem::path("temporal_buffer_io");
  std::filesystem::remove_all(dir);
  buf.save(dir);
  const TemporalBuffer back = TemporalBuffer::load(dir, 2);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].voxel.shape() == buf[i].voxel.shape());
    CHECK(max_abs_diff(back[i].voxel, buf[i].voxel) < 1e-6);
    CHECK(max_abs_diff(back[i].bev, buf[i].bev) < 1e-6);
    CHECK(back[i].pose.rotation.isApprox(buf[i].pose.rotation, 1e-12));
    CHECK(back[i].pose.translation.isApprox(buf[i].pose.translation, 1e-12));
  }
}

TEST_CASE("dte passes the first frame through and then fuses") {
  CounterRng rng(53, "dte");
  const RefGrid3D vg = make_ref_grid_3d(kBounds, {4, 6, 2});
  const RefGrid2D bg = make_ref_grid_2d(kBounds, {8, 12});
  const auto module = TemporalModule::seeded(8, 8, 2, 2, 2, rng);
  TemporalBuffer buf(2);
  const Tensor v0 = oracle::random_tensor({8, 4, 6, 2}, rng);
  const Tensor b0 = oracle::random_tensor({8, 8, 12}, rng);
  const DteOutput first = dte_step(buf, v0, b0, Pose::identity(), vg, bg, module);
  CHECK(first.voxel == v0);
  CHECK(first.bev == b0);
  CHECK(buf.size() == 1);
  const DteOutput second = dte_step(buf, v0, b0, Pose::from_yaw(0.1, Vec3(1, 0, 0)), vg, bg, module);
  CHECK(second.voxel.shape() == v0.shape());
  CHECK(second.bev.shape() == b0.shape());
  CHECK(all_finite(second.voxel));
  CHECK_FALSE(second.voxel == v0);
  CHECK(buf.size() == 2);
  CHECK_THROWS_AS(dte_step(buf, v0, b0, std::nullopt, vg, bg, module), std::invalid_argument);
}
