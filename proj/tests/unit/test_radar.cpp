#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "radocc/radar.hpp"
#include "radocc/synthscene.hpp"

using namespace radocc;

namespace {

RadarSweep sweep_with(std::vector<RadarPoint> pts, const Vec3& ego_v, const Pose& r2e) {
  RadarSweep s;
  s.points = std::move(pts);
  s.radar_to_ego = r2e;
  s.ego_velocity = ego_v;
  return s;
}

}  // namespace

TEST_CASE("stationary target straight ahead cancels the ego speed") {
  // Ego drives forward at 10 m/s; a static point 20 m ahead closes at 10 m/s.
  const RadarSweep s = sweep_with({{20, 0, 0, 1, 2, -10}}, Vec3(10, 0, 0), Pose::identity());
  const AccumulatedCloud c = compensate_and_accumulate(std::span(&s, 1));
  REQUIRE(c.points.size() == 1);
  CHECK(std::abs(c.points[0].vx) < 1e-12);
  CHECK(std::abs(c.points[0].vy) < 1e-12);
  CHECK(c.points[0].power == 1);
  CHECK(c.points[0].snr == 2);
}

TEST_CASE("radial speed is split along azimuth and elevation") {
  // Stationary ego, point at 45 degrees azimuth receding at 2 m/s.
  const double r = std::sqrt(2.0);
  const RadarSweep s = sweep_with({{1, 1, 0, 0, 0, 2}}, Vec3::Zero(), Pose::identity());
  const AccumulatedCloud c = compensate_and_accumulate(std::span(&s, 1));
  CHECK(c.points[0].vx == doctest::Approx(2 / r));
  CHECK(c.points[0].vy == doctest::Approx(2 / r));

  // Elevated point: the vertical component is dropped.
  const RadarSweep e = sweep_with({{1, 0, 1, 0, 0, 2}}, Vec3::Zero(), Pose::identity());
  const AccumulatedCloud ce = compensate_and_accumulate(std::span(&e, 1));
  CHECK(ce.points[0].vx == doctest::Approx(2 / r));
  CHECK(ce.points[0].vy == doctest::Approx(0.0));
}

TEST_CASE("mounting and sweep transforms carry position and velocity") {
  const Pose r2e = Pose::from_yaw(std::numbers::pi / 2, Vec3(1, 0, 0.5));
  RadarSweep s = sweep_with({{5, 0, 0, 0, 0, 3}}, Vec3::Zero(), r2e);
  s.sweep_to_current = Pose::from_yaw(0.0, Vec3(-2, 0, 0));
  const AccumulatedCloud c = compensate_and_accumulate(std::span(&s, 1));
  CHECK(c.points[0].x == doctest::Approx(-1.0));
  CHECK(c.points[0].y == doctest::Approx(5.0));
  CHECK(c.points[0].z == doctest::Approx(0.5));
  CHECK(c.points[0].vx == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.points[0].vy == doctest::Approx(3.0));
}

TEST_CASE("zero-range points are skipped and counted") {
  const RadarSweep s = sweep_with({{0, 0, 0, 1, 1, 1}, {3, 0, 0, 1, 1, 0}}, Vec3::Zero(),
                                  Pose::identity());
  const AccumulatedCloud c = compensate_and_accumulate(std::span(&s, 1));
  CHECK(c.points.size() == 1);
  CHECK(c.skipped_zero_range == 1);
}

TEST_CASE("missing calibration or ego velocity is rejected") {
  RadarSweep s = sweep_with({{1, 0, 0, 0, 0, 0}}, Vec3::Zero(), Pose::identity());
  s.radar_to_ego.reset();
  CHECK_THROWS_AS(compensate_and_accumulate(std::span(&s, 1)), std::invalid_argument);
  s.radar_to_ego = Pose::identity();
  s.ego_velocity.reset();
  CHECK_THROWS_AS(compensate_and_accumulate(std::span(&s, 1)), std::invalid_argument);
}

TEST_CASE("static synthetic points compensate to zero across sweeps") {
  SynthConfig cfg;
  cfg.frames = 3;
  const GridBounds b{{-60, 60}, {-40, 40}, {-3, 5}};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene scene = generate_scene(seed, cfg, b);
    for (std::size_t r = 0; r < scene.rig.radars.size(); ++r) {
      std::vector<RadarSweep> sweeps;
      std::vector<std::vector<int>> sources;
      for (std::size_t t = 0; t < cfg.frames; ++t) {
        std::vector<int> src;
        RadarSweep s = simulate_radar_sweep(scene, t, r, cfg.frames - 1);
        simulate_radar_points(scene, t, r, &src);
        sweeps.push_back(std::move(s));
        sources.push_back(std::move(src));
      }
      const AccumulatedCloud c = compensate_and_accumulate(sweeps);
      std::size_t k = 0;
      for (std::size_t t = 0; t < sweeps.size(); ++t) {
        for (std::size_t i = 0; i < sources[t].size(); ++i) {
          const CloudPoint& p = c.points[k++];
          const int src = sources[t][i];
          Vec3 truth = Vec3::Zero();
          if (src >= 0) {
            const Box3D& box = scene.objects[static_cast<std::size_t>(src)].box;
            truth = expected_compensated_velocity(scene, t, r, cfg.frames - 1,
                                                  sweeps[t].points[i], Vec3(box.vx, box.vy, 0));
          }
          CHECK(std::hypot(p.vx - truth.x(), p.vy - truth.y()) < 1e-6);
        }
      }
      CHECK(k == c.points.size());
    }
  }
}

TEST_CASE("pillar statistics") {
  AccumulatedCloud c;
  c.points.push_back({0.2, 0.3, 1.0, 1.0, -1.0, 5.0, 7.0});
  c.points.push_back({0.6, 0.9, 3.0, 3.0, 1.0, 2.0, 9.0});
  c.points.push_back({100, 0, 0, 0, 0, 0, 0});
  const GridBounds range{{0, 4}, {0, 2}, {-5, 5}};
  const PillarStatistics st = pillar_statistics(c, range, {2, 4});
  CHECK(st.in_range == 2);
  CHECK(st.dropped == 1);
  CHECK(st.counts[0] == 2);
  CHECK(st.raw.at(0, 0, 0) == doctest::Approx(std::log(3.0)));
  CHECK(st.raw.at(1, 0, 0) == doctest::Approx(2.0));
  CHECK(st.raw.at(2, 0, 0) == doctest::Approx(2.0));
  CHECK(st.raw.at(3, 0, 0) == doctest::Approx(0.0));
  CHECK(st.raw.at(4, 0, 0) == 5.0);
  CHECK(st.raw.at(5, 0, 0) == 9.0);
  CHECK(st.raw.at(6, 0, 0) == doctest::Approx(-0.1));
  CHECK(st.raw.at(7, 0, 0) == doctest::Approx(0.1));

  CounterRng rng(21, "pillar");
  PillarEncoder enc = PillarEncoder::seeded(6, rng);
  enc.projection.bias.assign(6, 1.0);
  const Tensor f = pillarize(c, range, {2, 4}, enc);
  CHECK(f.shape() == Shape{6, 2, 4});
  for (std::size_t ch = 0; ch < 6; ++ch) CHECK(f.at(ch, 1, 3) == 0.0);
}

TEST_CASE("identity backbone is a no-op") {
  CounterRng rng(22, "bb");
  const Tensor x = oracle::random_tensor({4, 5, 6}, rng);
  CHECK(BevBackbone::identity(4).forward(x) == x);
  CHECK(BevBackbone::seeded(4, rng).forward(x).shape() == x.shape());
}
