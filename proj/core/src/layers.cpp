#include "radocc/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace radocc {

void Linear::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t out = out_features();
  const std::size_t in = in_features();
  const double* w = weight.data().data();
  for (std::size_t o = 0; o < out; ++o) {
    double s = bias.empty() ? 0.0 : bias[o];
    const double* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) s += row[i] * x[i];
    y[o] = s;
  }
}

std::vector<double> Linear::operator()(std::span<const double> x) const {
  if (x.size() != in_features()) {
    throw std::invalid_argument("Linear: expected " + std::to_string(in_features()) +
                                " inputs, got " + std::to_string(x.size()));
  }
  std::vector<double> y(out_features());
  apply(x, y);
  return y;
}

Linear Linear::zeros(std::size_t out, std::size_t in) {
  return Linear{Tensor({out, in}), std::vector<double>(out, 0.0)};
}

Linear Linear::identity(std::size_t n) {
  Linear l = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) l.weight.at(i, i) = 1.0;
  return l;
}

Linear Linear::seeded(std::size_t out, std::size_t in, CounterRng& rng, double gain) {
  Linear l = zeros(out, in);
  const double s = gain / std::sqrt(static_cast<double>(in));
  for (auto& w : l.weight.data()) w = rng.uniform(-s, s);
  return l;
}

Tensor apply_pointwise(const Linear& layer, const Tensor& x) {
  const std::size_t in = layer.in_features();
  const std::size_t out = layer.out_features();
  if (x.dim(0) != in) {
    throw std::invalid_argument("apply_pointwise: expected " + std::to_string(in) +
                                " channels, got " + std::to_string(x.dim(0)));
  }
  Shape shape = x.shape();
  shape[0] = out;
  Tensor y(shape);
  const std::size_t plane = x.plane_size();
  std::vector<double> src(in), dst(out);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < in; ++c) src[c] = x[c * plane + p];
    layer.apply(src, dst);
    for (std::size_t c = 0; c < out; ++c) y[c * plane + p] = dst[c];
  }
  return y;
}

Tensor ConvBlock::forward(const Tensor& x) const {
  const std::size_t pad = kernel_size() / 2;
  Tensor y = is_3d() ? conv3d(x, kernel, bias, 1, pad) : conv2d(x, kernel, bias, 1, pad);
  if (!affine_scale.empty()) y = channel_affine(y, affine_scale, affine_shift);
  if (relu) y = radocc::relu(y);
  return y;
}

namespace {

Shape kernel_shape(std::size_t spatial_dims, std::size_t out, std::size_t in, std::size_t k) {
  if (spatial_dims != 2 && spatial_dims != 3) {
    throw std::invalid_argument("ConvBlock: spatial_dims must be 2 or 3");
  }
  Shape s{out, in};
  for (std::size_t i = 0; i < spatial_dims; ++i) s.push_back(k);
  return s;
}

}  // namespace

ConvBlock ConvBlock::zeros(std::size_t spatial_dims, std::size_t out, std::size_t in,
                           std::size_t k, bool relu) {
  ConvBlock b;
  b.kernel = Tensor(kernel_shape(spatial_dims, out, in, k));
  b.bias.assign(out, 0.0);
  b.affine_scale.assign(out, 1.0);
  b.affine_shift.assign(out, 0.0);
  b.relu = relu;
  return b;
}

ConvBlock ConvBlock::seeded(std::size_t spatial_dims, std::size_t out, std::size_t in,
                            std::size_t k, bool relu, CounterRng& rng, double gain) {
  ConvBlock b = zeros(spatial_dims, out, in, k, relu);
  double fan_in = static_cast<double>(in);
  for (std::size_t i = 0; i < spatial_dims; ++i) fan_in *= static_cast<double>(k);
  const double s = gain / std::sqrt(fan_in);
  for (auto& w : b.kernel.data()) w = rng.uniform(-s, s);
  return b;
}

ConvBlock ConvBlock::identity(std::size_t spatial_dims, std::size_t channels, std::size_t k) {
  ConvBlock b = zeros(spatial_dims, channels, channels, k, false);
  const std::size_t c = k / 2;
  for (std::size_t o = 0; o < channels; ++o) {
    if (spatial_dims == 2) {
      b.kernel.at(o, o, c, c) = 1.0;
    } else {
      b.kernel.at(o, o, c, c, c) = 1.0;
    }
  }
  return b;
}

}  // namespace radocc
