#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "radocc/geometry.hpp"
#include "radocc/layers.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// One radar detection in the radar frame. `v_rel` is the measured radial
/// velocity, positive when the target recedes from the sensor.
struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double power = 0.0;
  double snr = 0.0;
  double v_rel = 0.0;
};

struct RadarSweep {
  std::vector<RadarPoint> points;
  std::optional<Pose> radar_to_ego;
  /// Ego velocity at sweep time, expressed in the sweep-time ego frame (m/s).
  std::optional<Vec3> ego_velocity;
  /// Sweep-time ego frame -> current ego frame.
  Pose sweep_to_current;
  double timestamp = 0.0;
};

/// Compensated point in the current ego frame: [x, y, z, v_x, v_y, power, snr].
struct CloudPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double power = 0.0;
  double snr = 0.0;
};

inline constexpr std::size_t kCloudAttributes = 7;

struct AccumulatedCloud {
  std::vector<CloudPoint> points;
  /// Points skipped because their range was zero (azimuth/elevation undefined).
  std::size_t skipped_zero_range = 0;

  /// N x 7 view of the points; throws if the cloud is empty.
  Tensor as_tensor() const;
};

/// Multi-sweep accumulation with radial-velocity compensation. Per point:
/// the ego velocity is rotated into the radar frame, its projection on the
/// line of sight is added to v_rel, the compensated radial speed is split
/// into planar components (the vertical component is dropped), and both
/// velocity and position are carried into the current ego frame. Sweeps are
/// concatenated in input order. Dynamic-object motion during accumulation is
/// not corrected.
///
/// Throws std::invalid_argument if a sweep lacks calibration or ego velocity.
AccumulatedCloud compensate_and_accumulate(std::span<const RadarSweep> sweeps);

// ---------------------------------------------------------------------------
// Pillar encoder

/// Raw per-pillar statistics: log(1 + count), mean z, mean v_x, mean v_y,
/// max power, max snr, mean x and y offset from the pillar center.
inline constexpr std::size_t kPillarRawFeatures = 8;

struct PillarStatistics {
  Tensor raw;                       // kPillarRawFeatures x H x W
  std::vector<std::size_t> counts;  // H * W, row-major
  std::size_t in_range = 0;
  std::size_t dropped = 0;
};

PillarStatistics pillar_statistics(const AccumulatedCloud& cloud, const GridBounds& range,
                                   Extent2 bev);

struct PillarEncoder {
  Linear projection;  // C_R x kPillarRawFeatures, bias-free

  std::size_t channels() const { return projection.out_features(); }
  static PillarEncoder seeded(std::size_t channels, CounterRng& rng);
};

/// Bins the cloud into BEV pillars and mixes the raw statistics into C_R
/// channels. Empty pillars are exactly zero.
Tensor pillarize(const AccumulatedCloud& cloud, const GridBounds& range, Extent2 bev,
                 const PillarEncoder& encoder);

/// Shape-preserving residual stack: y = x + L2(L1(x)), each L a 3x3
/// conv + affine + ReLU.
struct BevBackbone {
  ConvBlock layer1;
  ConvBlock layer2;

  Tensor forward(const Tensor& pseudo_image) const;

  static BevBackbone seeded(std::size_t channels, CounterRng& rng);
  /// Zero residual branch: forward() returns its input.
  static BevBackbone identity(std::size_t channels);
};

}  // namespace radocc
