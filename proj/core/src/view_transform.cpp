#include "radocc/view_transform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace radocc {

namespace {

void check_views(std::span<const Tensor> features, std::span<const CameraModel> cams,
                 const char* what) {
  if (features.size() != cams.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(features.size()) +
                                " feature maps for " + std::to_string(cams.size()) + " cameras");
  }
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const Tensor& f = features[i];
    if (f.rank() != 3 || f.dim(1) != cams[i].feature_h || f.dim(2) != cams[i].feature_w) {
      throw std::invalid_argument(std::string(what) + ": view " + std::to_string(i) +
                                  " feature map does not match the camera feature extent");
    }
    if (f.dim(0) != features[0].dim(0)) {
      throw std::invalid_argument(std::string(what) + ": views disagree on channel count");
    }
  }
}

std::size_t nearest_index(double coord, std::size_t extent) {
  const auto i = static_cast<std::size_t>(std::floor(coord + 0.5));
  return std::min(i, extent - 1);
}

}  // namespace

RadarQueryBranch RadarQueryBranch::seeded(std::size_t radar_channels, std::size_t channels,
                                          CounterRng& rng) {
  return {ConvBlock::seeded(2, channels, radar_channels, 1, true, rng)};
}

VoxelQueries cvqg_radar_branch(const Tensor& radar_bev, const RefGrid3D& grid,
                               const RadarQueryBranch& branch) {
  const Tensor resized = resize_bilinear(radar_bev, grid.extent.h, grid.extent.w);
  return {unsqueeze_height(branch.cbr.forward(resized), grid.extent.z), grid};
}

VoxelQueries cvqg_image_branch(std::span<const Tensor> features,
                               std::span<const CameraModel> cams, const RefGrid3D& grid) {
  check_views(features, cams, "cvqg_image_branch");
  if (features.empty()) throw std::invalid_argument("cvqg_image_branch: no camera views");
  const std::size_t c = features[0].dim(0);
  const Extent3 e = grid.extent;
  const std::size_t cells = grid.cell_count();
  Tensor q({c, e.h, e.w, e.z});
  const std::vector<Vec3> centers = grid.centers();
  for (std::size_t view = 0; view < cams.size(); ++view) {
    const CameraModel& cam = cams[view];
    const Tensor& f = features[view];
    const std::size_t fplane = cam.feature_h * cam.feature_w;
    for (std::size_t idx = 0; idx < cells; ++idx) {
      const Projection pr = project_point(centers[idx], cam);
      if (!pr.valid) continue;
      const std::size_t u = nearest_index(pr.u, cam.feature_w);
      const std::size_t v = nearest_index(pr.v, cam.feature_h);
      for (std::size_t ch = 0; ch < c; ++ch) {
        q[ch * cells + idx] = f[ch * fplane + v * cam.feature_w + u];
      }
    }
  }
  return {std::move(q), grid};
}

VoxelQueries cvqg_combine(const VoxelQueries& radar, const VoxelQueries& image) {
  return {add(radar.features, image.features), radar.grid};
}

// ---------------------------------------------------------------------------

VoxelQueries cross_view_attention(const VoxelQueries& queries, std::span<const Tensor> features,
                                  std::span<const CameraModel> cams,
                                  const DeformAttnParams& params) {
  check_views(features, cams, "cross_view_attention");
  const Tensor& q = queries.features;
  const std::size_t c = q.dim(0);
  if (c != params.channels || (!features.empty() && features[0].dim(0) != c)) {
    throw std::invalid_argument("cross_view_attention: channel mismatch between queries, "
                                "image features and attention params");
  }
  std::vector<Tensor> projected;
  projected.reserve(features.size());
  for (const Tensor& f : features) projected.push_back(project_values(f, params));

  const std::size_t cells = queries.grid.cell_count();
  const std::vector<Vec3> centers = queries.grid.centers();
  Tensor out = q;
  std::vector<double> query(c), acc(c), view_out(c);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    for (std::size_t ch = 0; ch < c; ++ch) query[ch] = q[ch * cells + idx];
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t hits = 0;
    for (std::size_t view = 0; view < cams.size(); ++view) {
      const Projection pr = project_point(centers[idx], cams[view]);
      if (!pr.valid) continue;
      const double ref[2] = {pr.u, pr.v};
      deform_attn_projected(query, ref, projected[view], params, view_out);
      for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += view_out[ch];
      ++hits;
    }
    if (hits == 0) continue;
    const double inv = 1.0 / static_cast<double>(hits);
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * cells + idx] = acc[ch] * inv;
  }
  return {std::move(out), queries.grid};
}

VoxelQueries voxel_local_interaction(const VoxelQueries& queries, const ConvBlock& conv) {
  return {add(queries.features, conv.forward(queries.features)), queries.grid};
}

VoxelEncoder VoxelEncoder::seeded(std::size_t channels, std::size_t num_layers,
                                  std::size_t heads, std::size_t points, CounterRng& rng) {
  if (num_layers == 0) throw std::invalid_argument("VoxelEncoder: layers must be >= 1");
  VoxelEncoder enc;
  for (std::size_t l = 0; l < num_layers; ++l) {
    EncoderLayer layer{DeformAttnParams::seeded(channels, heads, points, 2, rng),
                       ConvBlock::seeded(3, channels, channels, 3, false, rng, 0.5)};
    enc.layers.push_back(std::move(layer));
  }
  return enc;
}

VoxelQueries encoder_layer(const VoxelQueries& queries, std::span<const Tensor> features,
                           std::span<const CameraModel> cams, const EncoderLayer& layer) {
  const VoxelQueries attended = cross_view_attention(queries, features, cams, layer.attention);
  VoxelQueries q{rms_norm_channels(add(queries.features, attended.features)), queries.grid};
  q = voxel_local_interaction(q, layer.local);
  q.features = rms_norm_channels(q.features);
  return q;
}

VoxelQueries voxel_encoder(const VoxelQueries& queries, std::span<const Tensor> features,
                           std::span<const CameraModel> cams, const VoxelEncoder& encoder) {
  if (encoder.layers.empty()) throw std::invalid_argument("voxel_encoder: L must be >= 1");
  VoxelQueries q = queries;
  for (const auto& layer : encoder.layers) q = encoder_layer(q, features, cams, layer);
  return q;
}

}  // namespace radocc
