#include "radocc/deform_attn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace radocc {

void DeformAttnParams::validate() const {
  if (channels == 0 || heads == 0 || points == 0) {
    throw std::invalid_argument("DeformAttnParams: channels, heads and points must be >= 1");
  }
  if (channels % heads != 0) {
    throw std::invalid_argument("DeformAttnParams: channels (" + std::to_string(channels) +
                                ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
  if (dims != 2 && dims != 3) throw std::invalid_argument("DeformAttnParams: dims must be 2 or 3");
  auto check = [&](const Linear& l, std::size_t out, std::size_t in, const char* name) {
    if (l.weight.rank() != 2 || l.out_features() != out || l.in_features() != in ||
        (!l.bias.empty() && l.bias.size() != out)) {
      throw std::invalid_argument(std::string("DeformAttnParams: ") + name + " has wrong shape");
    }
  };
  check(value_proj, channels, channels, "value_proj");
  check(offset_proj, heads * points * dims, channels, "offset_proj");
  check(weight_proj, heads * points, channels, "weight_proj");
  check(output_proj, channels, channels, "output_proj");
}

DeformAttnParams DeformAttnParams::seeded(std::size_t channels, std::size_t heads,
                                          std::size_t points, std::size_t dims,
                                          CounterRng& rng) {
  DeformAttnParams p;
  p.channels = channels;
  p.heads = heads;
  p.points = points;
  p.dims = dims;
  p.value_proj = Linear::seeded(channels, channels, rng);
  p.output_proj = Linear::seeded(channels, channels, rng);
  p.weight_proj = Linear::seeded(heads * points, channels, rng);
  p.offset_proj = Linear::seeded(heads * points * dims, channels, rng, 0.1);
  // Deformable-DETR style bias: head h looks along angle 2*pi*h/heads, point
  // k at radius k+1 (grid cells).
  for (std::size_t h = 0; h < heads; ++h) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(h) / static_cast<double>(heads);
    for (std::size_t k = 0; k < points; ++k) {
      const double r = static_cast<double>(k + 1);
      const std::size_t base = (h * points + k) * dims;
      p.offset_proj.bias[base + 0] = r * std::cos(a);
      p.offset_proj.bias[base + 1] = r * std::sin(a);
      if (dims == 3) p.offset_proj.bias[base + 2] = 0.0;
    }
  }
  p.validate();
  return p;
}

DeformAttnParams DeformAttnParams::degenerate(std::size_t channels, std::size_t heads,
                                              std::size_t points, std::size_t dims) {
  DeformAttnParams p;
  p.channels = channels;
  p.heads = heads;
  p.points = points;
  p.dims = dims;
  p.value_proj = Linear::identity(channels);
  p.output_proj = Linear::identity(channels);
  p.weight_proj = Linear::zeros(heads * points, channels);
  p.offset_proj = Linear::zeros(heads * points * dims, channels);
  p.validate();
  return p;
}

std::vector<double> attention_weights(std::span<const double> query, const DeformAttnParams& p) {
  std::vector<double> w = p.weight_proj(query);
  for (std::size_t h = 0; h < p.heads; ++h) {
    softmax_inplace(std::span<double>(w).subspan(h * p.points, p.points));
  }
  return w;
}

std::vector<double> sampling_offsets(std::span<const double> query, const DeformAttnParams& p) {
  return p.offset_proj(query);
}

Tensor project_values(const Tensor& value, const DeformAttnParams& p) {
  return apply_pointwise(p.value_proj, value);
}

void deform_attn_projected(std::span<const double> query, std::span<const double> ref,
                           const Tensor& projected_value, const DeformAttnParams& p,
                           std::span<double> out) {
  if (query.size() != p.channels) {
    throw std::invalid_argument("deform_attn: query has " + std::to_string(query.size()) +
                                " channels, expected " + std::to_string(p.channels));
  }
  if (ref.size() != p.dims || projected_value.rank() != p.dims + 1 ||
      projected_value.dim(0) != p.channels) {
    throw std::invalid_argument("deform_attn: reference/value dimensionality mismatch");
  }
  const std::vector<double> weights = attention_weights(query, p);
  const std::vector<double> offsets = sampling_offsets(query, p);
  const std::size_t hd = p.head_dim();
  std::vector<double> heads_out(p.channels, 0.0);
  for (std::size_t h = 0; h < p.heads; ++h) {
    std::span<double> slot(heads_out.data() + h * hd, hd);
    for (std::size_t k = 0; k < p.points; ++k) {
      const double w = weights[h * p.points + k];
      const double* off = offsets.data() + (h * p.points + k) * p.dims;
      if (p.dims == 2) {
        bilinear_accumulate(projected_value, h * hd, (h + 1) * hd, ref[0] + off[0],
                            ref[1] + off[1], w, slot);
      } else {
        trilinear_accumulate(projected_value, h * hd, (h + 1) * hd, ref[0] + off[0],
                             ref[1] + off[1], ref[2] + off[2], w, slot);
      }
    }
  }
  p.output_proj.apply(heads_out, out);
}

std::vector<double> deform_attn_2d(std::span<const double> query, Point2 ref,
                                   const Tensor& value, const DeformAttnParams& p) {
  if (p.dims != 2) throw std::invalid_argument("deform_attn_2d: params are not 2-D");
  const Tensor v = project_values(value, p);
  std::vector<double> out(p.channels);
  const double r[2] = {ref.x, ref.y};
  deform_attn_projected(query, r, v, p, out);
  return out;
}

std::vector<double> deform_attn_3d(std::span<const double> query, Point3 ref,
                                   const Tensor& value, const DeformAttnParams& p) {
  if (p.dims != 3) throw std::invalid_argument("deform_attn_3d: params are not 3-D");
  const Tensor v = project_values(value, p);
  std::vector<double> out(p.channels);
  const double r[3] = {ref.x, ref.y, ref.z};
  deform_attn_projected(query, r, v, p, out);
  return out;
}

}  // namespace radocc
