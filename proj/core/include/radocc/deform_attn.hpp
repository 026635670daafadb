#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "radocc/layers.hpp"
#include "radocc/rng.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// Learnable parts of single-scale deformable attention over a 2-D
/// (C x H x W) or 3-D (C x H x W x Z) value map.
///
/// For a query q and reference r (grid units of the value map):
///   offsets  = offset_proj(q)                 -> heads x points x dims
///   weights  = softmax_per_head(weight_proj(q)) -> heads x points
///   head h   = sum_p weights[h,p] * sample(V_h, r + offsets[h,p])
///   output   = output_proj(concat_h head h)
/// where V = value_proj(value) and V_h is the h-th block of C / heads channels.
struct DeformAttnParams {
  std::size_t channels = 0;
  std::size_t heads = 0;
  std::size_t points = 0;
  std::size_t dims = 2;
  Linear value_proj;
  Linear offset_proj;
  Linear weight_proj;
  Linear output_proj;

  std::size_t head_dim() const { return channels / heads; }
  void validate() const;

  static DeformAttnParams seeded(std::size_t channels, std::size_t heads, std::size_t points,
                                 std::size_t dims, CounterRng& rng);
  /// Identity value/output projections, zero offsets and uniform weights:
  /// the output equals the value map sampled at the reference point.
  static DeformAttnParams degenerate(std::size_t channels, std::size_t heads,
                                     std::size_t points, std::size_t dims);
};

/// Normalized attention weights, heads x points (row-major).
std::vector<double> attention_weights(std::span<const double> query, const DeformAttnParams& p);
/// Sampling offsets, heads x points x dims (row-major), grid units.
std::vector<double> sampling_offsets(std::span<const double> query, const DeformAttnParams& p);

/// value_proj applied at every location; compute once per value map.
Tensor project_values(const Tensor& value, const DeformAttnParams& p);

/// Attention against an already projected value map. `out` has `channels`
/// entries and is overwritten.
void deform_attn_projected(std::span<const double> query, std::span<const double> ref,
                           const Tensor& projected_value, const DeformAttnParams& p,
                           std::span<double> out);

std::vector<double> deform_attn_2d(std::span<const double> query, Point2 ref,
                                   const Tensor& value, const DeformAttnParams& p);
std::vector<double> deform_attn_3d(std::span<const double> query, Point3 ref,
                                   const Tensor& value, const DeformAttnParams& p);

}  // namespace radocc
