#pragma once

#include <cstddef>
#include <vector>

#include "radocc/layers.hpp"
#include "radocc/rng.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// Transposed 3-D convolution, kernel 2 and stride 2 in every axis.
struct VoxelUpsampler {
  Tensor kernel;  // C_in x C_out x 2 x 2 x 2
  std::vector<double> bias;

  static VoxelUpsampler seeded(std::size_t channels, CounterRng& rng);
  /// Every output cell copies its parent cell (nearest upsampling).
  static VoxelUpsampler replication(std::size_t channels);
};

Tensor upsample_voxel(const Tensor& low, const VoxelUpsampler& up);

/// Voxel side of the exchange:
///   F_temp  = f3D(concat[F_vox, unsqueeze(f2D(F_bev))])
///   F_fused = F_vox + sigmoid(g3D(F_temp)) * F_temp
struct VoxelEnhancer {
  ConvBlock f2d;   // C_bev -> C, 3x3
  ConvBlock f3d;   // 2C -> C, 1x1x1
  ConvBlock gate;  // C -> C, 3x3x3, no ReLU

  static VoxelEnhancer seeded(std::size_t channels, std::size_t bev_channels, CounterRng& rng);
};

Tensor enhance_voxel(const Tensor& f_vox, const Tensor& f_bev, const VoxelEnhancer& m);

/// BEV side of the exchange, with S the height-mean of F_vox:
///   F_bev'  = CBR2D(S)
///   F_temp  = f2D(concat[F_bev, F_bev'])
///   F_fused = F_bev' + sigmoid(g2D(F_temp)) * F_temp
struct BevEnhancer {
  ConvBlock squeeze_cbr;  // C -> C, 3x3
  ConvBlock f2d;          // C_bev + C -> C, 3x3
  ConvBlock gate;         // C -> C, 3x3, no ReLU

  static BevEnhancer seeded(std::size_t channels, std::size_t bev_channels, CounterRng& rng);
};

Tensor enhance_bev(const Tensor& f_bev, const Tensor& f_vox, const BevEnhancer& m);

/// Per-cell logit projections (C -> 1, 1x1) for the binary auxiliary masks.
struct AuxHeads {
  ConvBlock occ;  // 3-D
  ConvBlock seg;  // 2-D

  static AuxHeads seeded(std::size_t channels, CounterRng& rng);
  static AuxHeads zeros(std::size_t channels);
};

struct AuxMasks {
  Tensor occ;  // H x W x Z
  Tensor seg;  // H x W
};

/// Sigmoid of the projected logits. Logits are clamped to +-30 so every
/// probability stays strictly inside (0, 1).
AuxMasks aux_heads(const Tensor& fused_vox, const Tensor& fused_bev, const AuxHeads& heads);

struct FusedFeatures {
  Tensor voxel;
  Tensor bev;
  Tensor aux_occ;
  Tensor aux_seg;
};

struct FusionModule {
  VoxelUpsampler upsampler;
  VoxelEnhancer voxel;
  BevEnhancer bev;
  AuxHeads aux;

  static FusionModule seeded(std::size_t channels, std::size_t bev_channels, CounterRng& rng);
};

/// Upsamples the low-resolution voxel features, resizes the BEV map to the
/// upsampled extent if needed and runs both enhancers and the aux heads.
FusedFeatures cross_modal_fusion(const Tensor& low_voxel, const Tensor& bev,
                                 const FusionModule& module);

constexpr double kAuxLogitClamp = 30.0;

}  // namespace radocc
