#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "radocc/deform_attn.hpp"
#include "radocc/geometry.hpp"
#include "radocc/layers.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// Detection classes.
enum class ObjectClass : int { car = 0, pedestrian = 1, rider = 2, large_vehicle = 3 };
inline constexpr std::size_t kNumDetClasses = 4;
std::string_view object_class_name(int label);

/// Occupancy labels: 0 is free space, 1..11 are semantic classes.
inline constexpr std::size_t kNumOccClasses = 12;
inline constexpr int kOccFree = 0;
std::string_view occ_class_name(int label);

/// Number of regressed box parameters: x y z l w h cos sin vx vy.
inline constexpr std::size_t kBoxParams = 10;

struct Box3D {
  double x = 0, y = 0, z = 0;
  double l = 1, w = 1, h = 1;
  double cos_yaw = 1, sin_yaw = 0;
  double vx = 0, vy = 0;
  int label = 0;
  double score = 1.0;
  /// Per-class probabilities for predictions; empty for ground truth.
  std::vector<double> class_probs;

  double yaw() const;
  std::array<double, kBoxParams> params() const;
  static Box3D from_params(std::span<const double> p, int label, double score = 1.0);
};

using BoxSet = std::vector<Box3D>;

// ---------------------------------------------------------------------------

/// Learned queries with fixed BEV reference points. Each query attends into
/// the BEV map (2-D deformable attention), then a two-layer perceptron emits
/// class logits and box parameters. The box center is the reference point's
/// metric position plus the regressed (x, y) offset.
struct DetectionHead {
  Tensor query_embed;             // n_q x C
  std::vector<Point2> reference;  // grid units (column, row)
  DeformAttnParams attention;
  Linear hidden;                  // C -> C, ReLU
  Linear cls;                     // C -> kNumDetClasses
  Linear box;                     // C -> kBoxParams

  std::size_t queries() const { return reference.size(); }

  static DetectionHead seeded(std::size_t channels, std::size_t queries, Extent2 bev,
                              std::size_t heads, std::size_t points, CounterRng& rng);
};

struct DetectionOutput {
  Tensor logits;  // n_q x kNumDetClasses
  Tensor boxes;   // n_q x kBoxParams, raw
};

DetectionOutput detection_head(const Tensor& bev, const DetectionHead& head);

/// Sigmoid scores, argmax class, normalized yaw, sizes clamped to >= 0.01 m.
/// Keeps the `top_k` highest-scoring queries, ordered by descending score.
BoxSet decode_detections(const DetectionOutput& out, const DetectionHead& head,
                         const RefGrid2D& grid, std::size_t top_k = 300);

/// Per-voxel two-layer perceptron.
struct OccupancyHead {
  Linear hidden;  // C -> hidden, ReLU
  Linear out;     // hidden -> kNumOccClasses

  static OccupancyHead seeded(std::size_t channels, std::size_t hidden, CounterRng& rng);
};

/// Logits laid out class-first: kNumOccClasses x H x W x Z.
Tensor occupancy_head(const Tensor& voxel, const OccupancyHead& head);

/// Per-voxel argmax of class-first logits, H*W*Z labels in row-major order.
std::vector<int> occupancy_labels(const Tensor& logits);

}  // namespace radocc
