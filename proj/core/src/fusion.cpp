#include "radocc/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace radocc {

VoxelUpsampler VoxelUpsampler::seeded(std::size_t channels, CounterRng& rng) {
  VoxelUpsampler up{Tensor({channels, channels, 2, 2, 2}), std::vector<double>(channels, 0.0)};
  // Each output cell receives exactly one input tap per input channel.
  const double s = 1.0 / std::sqrt(static_cast<double>(channels));
  for (auto& w : up.kernel.data()) w = rng.uniform(-s, s);
  return up;
}

VoxelUpsampler VoxelUpsampler::replication(std::size_t channels) {
  VoxelUpsampler up{Tensor({channels, channels, 2, 2, 2}), std::vector<double>(channels, 0.0)};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t d = 0; d < 2; ++d) up.kernel.at(c, c, a, b, d) = 1.0;
      }
    }
  }
  return up;
}

Tensor upsample_voxel(const Tensor& low, const VoxelUpsampler& up) {
  if (low.rank() != 4) throw std::invalid_argument("upsample_voxel: expected C x H x W x Z");
  if (up.kernel.rank() != 5 || up.kernel.dim(2) != 2) {
    throw std::invalid_argument("upsample_voxel: kernel must be C_in x C_out x 2 x 2 x 2");
  }
  return conv_transpose3d(low, up.kernel, up.bias, 2);
}

// ---------------------------------------------------------------------------

VoxelEnhancer VoxelEnhancer::seeded(std::size_t channels, std::size_t bev_channels,
                                    CounterRng& rng) {
  return {ConvBlock::seeded(2, channels, bev_channels, 3, true, rng),
          ConvBlock::seeded(3, channels, 2 * channels, 1, true, rng),
          ConvBlock::seeded(3, channels, channels, 3, false, rng, 0.5)};
}

Tensor enhance_voxel(const Tensor& f_vox, const Tensor& f_bev, const VoxelEnhancer& m) {
  if (f_vox.rank() != 4 || f_bev.rank() != 3 || f_vox.dim(1) != f_bev.dim(1) ||
      f_vox.dim(2) != f_bev.dim(2)) {
    throw std::invalid_argument("enhance_voxel: BEV extent does not match the voxel extent");
  }
  const Tensor lifted = unsqueeze_height(m.f2d.forward(f_bev), f_vox.dim(3));
  const Tensor f_temp = m.f3d.forward(concat_channels(f_vox, lifted));
  return add(f_vox, mul(sigmoid(m.gate.forward(f_temp)), f_temp));
}

BevEnhancer BevEnhancer::seeded(std::size_t channels, std::size_t bev_channels,
                                CounterRng& rng) {
  return {ConvBlock::seeded(2, channels, channels, 3, true, rng),
          ConvBlock::seeded(2, channels, bev_channels + channels, 3, true, rng),
          ConvBlock::seeded(2, channels, channels, 3, false, rng, 0.5)};
}

Tensor enhance_bev(const Tensor& f_bev, const Tensor& f_vox, const BevEnhancer& m) {
  if (f_vox.rank() != 4 || f_bev.rank() != 3 || f_vox.dim(1) != f_bev.dim(1) ||
      f_vox.dim(2) != f_bev.dim(2)) {
    throw std::invalid_argument("enhance_bev: BEV extent does not match the voxel extent");
  }
  const Tensor f_bev_prime = m.squeeze_cbr.forward(squeeze_height_mean(f_vox));
  const Tensor f_temp = m.f2d.forward(concat_channels(f_bev, f_bev_prime));
  return add(f_bev_prime, mul(sigmoid(m.gate.forward(f_temp)), f_temp));
}

// ---------------------------------------------------------------------------

AuxHeads AuxHeads::seeded(std::size_t channels, CounterRng& rng) {
  return {ConvBlock::seeded(3, 1, channels, 1, false, rng),
          ConvBlock::seeded(2, 1, channels, 1, false, rng)};
}

AuxHeads AuxHeads::zeros(std::size_t channels) {
  return {ConvBlock::zeros(3, 1, channels, 1, false), ConvBlock::zeros(2, 1, channels, 1, false)};
}

namespace {

Tensor clamped_sigmoid(const Tensor& logits) {
  Shape s(logits.shape().begin() + 1, logits.shape().end());
  Tensor out(s);
  auto src = logits.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = sigmoid(std::clamp(src[i], -kAuxLogitClamp, kAuxLogitClamp));
  }
  return out;
}

}  // namespace

AuxMasks aux_heads(const Tensor& fused_vox, const Tensor& fused_bev, const AuxHeads& heads) {
  return {clamped_sigmoid(heads.occ.forward(fused_vox)),
          clamped_sigmoid(heads.seg.forward(fused_bev))};
}

FusionModule FusionModule::seeded(std::size_t channels, std::size_t bev_channels,
                                  CounterRng& rng) {
  FusionModule m;
  m.upsampler = VoxelUpsampler::seeded(channels, rng);
  m.voxel = VoxelEnhancer::seeded(channels, bev_channels, rng);
  m.bev = BevEnhancer::seeded(channels, bev_channels, rng);
  m.aux = AuxHeads::seeded(channels, rng);
  return m;
}

FusedFeatures cross_modal_fusion(const Tensor& low_voxel, const Tensor& bev,
                                 const FusionModule& module) {
  const Tensor vox = upsample_voxel(low_voxel, module.upsampler);
  Tensor bev_r = bev;
  if (bev.rank() != 3) throw std::invalid_argument("cross_modal_fusion: BEV must be C x H x W");
  if (bev.dim(1) != vox.dim(1) || bev.dim(2) != vox.dim(2)) {
    bev_r = resize_bilinear(bev, vox.dim(1), vox.dim(2));
  }
  FusedFeatures out;
  out.voxel = enhance_voxel(vox, bev_r, module.voxel);
  out.bev = enhance_bev(bev_r, vox, module.bev);
  AuxMasks masks = aux_heads(out.voxel, out.bev, module.aux);
  out.aux_occ = std::move(masks.occ);
  out.aux_seg = std::move(masks.seg);
  return out;
}

}  // namespace radocc
