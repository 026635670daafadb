#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "radocc/deform_attn.hpp"
#include "radocc/geometry.hpp"
#include "radocc/layers.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// C x H_V x W_V x Z_V voxel features together with their reference grid.
struct VoxelQueries {
  Tensor features;
  RefGrid3D grid;
};

// ---------------------------------------------------------------------------
// Coarse voxel query generation

/// Channel adapter applied to the resized radar BEV map (C_R -> C).
struct RadarQueryBranch {
  ConvBlock cbr;

  static RadarQueryBranch seeded(std::size_t radar_channels, std::size_t channels,
                                 CounterRng& rng);
};

/// Radar prior: resize F_R to (H_V, W_V), CBR to C channels, replicate along Z.
VoxelQueries cvqg_radar_branch(const Tensor& radar_bev, const RefGrid3D& grid,
                               const RadarQueryBranch& branch);

/// Image prior: starts from zeros and, view by view, writes the nearest
/// feature cell into every voxel whose center projects validly. Later views
/// overwrite earlier ones. Rounding is half-up, clamped to the last cell.
VoxelQueries cvqg_image_branch(std::span<const Tensor> features,
                               std::span<const CameraModel> cams, const RefGrid3D& grid);

/// Element-wise sum of the two priors.
VoxelQueries cvqg_combine(const VoxelQueries& radar, const VoxelQueries& image);

// ---------------------------------------------------------------------------
// Voxel queries encoder

/// Each voxel center is projected into every view; the output is the mean of
/// the per-view deformable attention results over the views that see it.
/// Voxels seen by no view keep their query.
VoxelQueries cross_view_attention(const VoxelQueries& queries, std::span<const Tensor> features,
                                  std::span<const CameraModel> cams,
                                  const DeformAttnParams& params);

/// q + conv3x3x3(q).
VoxelQueries voxel_local_interaction(const VoxelQueries& queries, const ConvBlock& conv);

struct EncoderLayer {
  DeformAttnParams attention;
  ConvBlock local;
};

struct VoxelEncoder {
  std::vector<EncoderLayer> layers;

  static VoxelEncoder seeded(std::size_t channels, std::size_t num_layers, std::size_t heads,
                             std::size_t points, CounterRng& rng);
};

/// One layer: q <- rms(q + cross_view_attention(q)); q <- rms(local(q)).
VoxelQueries encoder_layer(const VoxelQueries& queries, std::span<const Tensor> features,
                           std::span<const CameraModel> cams, const EncoderLayer& layer);

VoxelQueries voxel_encoder(const VoxelQueries& queries, std::span<const Tensor> features,
                           std::span<const CameraModel> cams, const VoxelEncoder& encoder);

}  // namespace radocc
