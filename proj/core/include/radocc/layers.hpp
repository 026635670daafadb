#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "radocc/rng.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// Dense affine map y = W x + b with W stored out x in.
struct Linear {
  Tensor weight;
  std::vector<double> bias;

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> operator()(std::span<const double> x) const;

  static Linear zeros(std::size_t out, std::size_t in);
  static Linear identity(std::size_t n);
  /// Uniform(-s, s) weights with s = gain / sqrt(in); zero bias.
  static Linear seeded(std::size_t out, std::size_t in, CounterRng& rng, double gain = 1.0);
};

/// Applies a Linear independently at every spatial location of a
/// channel-first tensor (a 1x1 convolution).
Tensor apply_pointwise(const Linear& layer, const Tensor& x);

/// Convolution + per-channel affine (stands in for batch norm, no running
/// statistics) + optional ReLU. Works on 2-D (C x H x W) or 3-D
/// (C x H x W x Z) inputs depending on the kernel rank.
struct ConvBlock {
  Tensor kernel;
  std::vector<double> bias;
  std::vector<double> affine_scale;
  std::vector<double> affine_shift;
  bool relu = true;

  std::size_t kernel_size() const { return kernel.dim(2); }
  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t in_channels() const { return kernel.dim(1); }
  bool is_3d() const { return kernel.rank() == 5; }

  Tensor forward(const Tensor& x) const;

  static ConvBlock zeros(std::size_t spatial_dims, std::size_t out, std::size_t in,
                         std::size_t k, bool relu);
  static ConvBlock seeded(std::size_t spatial_dims, std::size_t out, std::size_t in,
                          std::size_t k, bool relu, CounterRng& rng, double gain = 1.0);
  /// out == in, 1-voxel-center kernel equal to the identity, no ReLU.
  static ConvBlock identity(std::size_t spatial_dims, std::size_t channels, std::size_t k);
};

}  // namespace radocc
