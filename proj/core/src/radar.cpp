#include "radocc/radar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace radocc {

Tensor AccumulatedCloud::as_tensor() const {
  if (points.empty()) throw std::invalid_argument("AccumulatedCloud::as_tensor: empty cloud");
  Tensor t({points.size(), kCloudAttributes});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const double row[kCloudAttributes] = {p.x, p.y, p.z, p.vx, p.vy, p.power, p.snr};
    for (std::size_t a = 0; a < kCloudAttributes; ++a) t.at(i, a) = row[a];
  }
  return t;
}

AccumulatedCloud compensate_and_accumulate(std::span<const RadarSweep> sweeps) {
  AccumulatedCloud cloud;
  for (std::size_t s = 0; s < sweeps.size(); ++s) {
    const RadarSweep& sweep = sweeps[s];
    if (!sweep.radar_to_ego) {
      throw std::invalid_argument("compensate_and_accumulate: sweep " + std::to_string(s) +
                                  " has no radar_to_ego calibration");
    }
    if (!sweep.ego_velocity) {
      throw std::invalid_argument("compensate_and_accumulate: sweep " + std::to_string(s) +
                                  " has no ego velocity");
    }
    const Pose& r2e = *sweep.radar_to_ego;
    const Pose& e2c = sweep.sweep_to_current;
    const Vec3 v_rad = r2e.rotation.transpose() * (*sweep.ego_velocity);
    const Mat3 vel_to_current = e2c.rotation * r2e.rotation;

    for (const RadarPoint& pt : sweep.points) {
      const double r = std::sqrt(pt.x * pt.x + pt.y * pt.y + pt.z * pt.z);
      if (!(r > 0.0)) {
        ++cloud.skipped_zero_range;
        continue;
      }
      const double phi = std::atan2(pt.y, pt.x);
      const double theta = std::asin(std::clamp(pt.z / r, -1.0, 1.0));
      const double cphi = std::cos(phi), sphi = std::sin(phi);
      const double cth = std::cos(theta), sth = std::sin(theta);

      const double v_r_com = v_rad.x() * cphi * cth + v_rad.y() * sphi * cth +
                             v_rad.z() * sth + pt.v_rel;
      const Vec3 v_com(v_r_com * cth * cphi, v_r_com * cth * sphi, 0.0);
      const Vec3 v_cur = vel_to_current * v_com;

      const Vec3 p_cur = e2c.apply(r2e.apply(Vec3(pt.x, pt.y, pt.z)));
      cloud.points.push_back(
          {p_cur.x(), p_cur.y(), p_cur.z(), v_cur.x(), v_cur.y(), pt.power, pt.snr});
    }
  }
  return cloud;
}

// ---------------------------------------------------------------------------

PillarStatistics pillar_statistics(const AccumulatedCloud& cloud, const GridBounds& range,
                                   Extent2 bev) {
  if (bev.h == 0 || bev.w == 0) throw std::invalid_argument("pillar_statistics: empty BEV extent");
  const double dx = range.x.span() / static_cast<double>(bev.w);
  const double dy = range.y.span() / static_cast<double>(bev.h);
  const std::size_t cells = bev.h * bev.w;

  PillarStatistics st;
  st.raw = Tensor({kPillarRawFeatures, bev.h, bev.w});
  st.counts.assign(cells, 0);
  std::vector<double> sum_z(cells, 0.0), sum_vx(cells, 0.0), sum_vy(cells, 0.0);
  std::vector<double> sum_ox(cells, 0.0), sum_oy(cells, 0.0);
  std::vector<double> max_pow(cells, -std::numeric_limits<double>::infinity());
  std::vector<double> max_snr(cells, -std::numeric_limits<double>::infinity());

  for (const CloudPoint& p : cloud.points) {
    if (!range.contains(Vec3(p.x, p.y, p.z))) {
      ++st.dropped;
      continue;
    }
    const auto col = std::min(bev.w - 1, static_cast<std::size_t>((p.x - range.x.min) / dx));
    const auto row = std::min(bev.h - 1, static_cast<std::size_t>((p.y - range.y.min) / dy));
    const std::size_t c = row * bev.w + col;
    ++st.in_range;
    ++st.counts[c];
    sum_z[c] += p.z;
    sum_vx[c] += p.vx;
    sum_vy[c] += p.vy;
    sum_ox[c] += p.x - (range.x.min + (static_cast<double>(col) + 0.5) * dx);
    sum_oy[c] += p.y - (range.y.min + (static_cast<double>(row) + 0.5) * dy);
    max_pow[c] = std::max(max_pow[c], p.power);
    max_snr[c] = std::max(max_snr[c], p.snr);
  }

  auto raw = st.raw.data();
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t n = st.counts[c];
    if (n == 0) continue;
    const double inv = 1.0 / static_cast<double>(n);
    const double feats[kPillarRawFeatures] = {
        std::log1p(static_cast<double>(n)), sum_z[c] * inv, sum_vx[c] * inv, sum_vy[c] * inv,
        max_pow[c], max_snr[c], sum_ox[c] * inv, sum_oy[c] * inv};
    for (std::size_t f = 0; f < kPillarRawFeatures; ++f) raw[f * cells + c] = feats[f];
  }
  return st;
}

PillarEncoder PillarEncoder::seeded(std::size_t channels, CounterRng& rng) {
  PillarEncoder enc{Linear::seeded(channels, kPillarRawFeatures, rng)};
  enc.projection.bias.clear();
  return enc;
}

Tensor pillarize(const AccumulatedCloud& cloud, const GridBounds& range, Extent2 bev,
                 const PillarEncoder& encoder) {
  if (encoder.projection.in_features() != kPillarRawFeatures) {
    throw std::invalid_argument("pillarize: encoder must take 8 raw pillar features");
  }
  PillarStatistics st = pillar_statistics(cloud, range, bev);
  Tensor out = apply_pointwise(encoder.projection, st.raw);
  // Keep empty pillars exactly zero even if the projection carries a bias.
  const std::size_t cells = bev.h * bev.w;
  for (std::size_t c = 0; c < cells; ++c) {
    if (st.counts[c] != 0) continue;
    for (std::size_t ch = 0; ch < out.dim(0); ++ch) out[ch * cells + c] = 0.0;
  }
  return out;
}

Tensor BevBackbone::forward(const Tensor& pseudo_image) const {
  return add(pseudo_image, layer2.forward(layer1.forward(pseudo_image)));
}

BevBackbone BevBackbone::seeded(std::size_t channels, CounterRng& rng) {
  return {ConvBlock::seeded(2, channels, channels, 3, true, rng),
          ConvBlock::seeded(2, channels, channels, 3, true, rng)};
}

BevBackbone BevBackbone::identity(std::size_t channels) {
  return {ConvBlock::zeros(2, channels, channels, 3, true),
          ConvBlock::zeros(2, channels, channels, 3, true)};
}

}  // namespace radocc
