#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "radocc/deform_attn.hpp"
#include "radocc/geometry.hpp"
#include "radocc/layers.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

// Pose alignment. Reference centers of the current grid are warped into the
// historical ego frame (T_hist^-1 T_t p) and the historical features are
// resampled there, zero outside the historical grid. Coordinates within 1e-9
// of a lattice point are snapped onto it.
Tensor align_history_voxel(const Tensor& hist, const RefGrid3D& grid, const Pose& pose_t,
                           const Pose& pose_hist);
Tensor align_history_bev(const Tensor& hist, const RefGrid2D& grid, const Pose& pose_t,
                         const Pose& pose_hist);

/// Residual block over the channel-concatenated history:
///   y = shortcut(x) + relu(body(x)),  x = concat(h_1, ..., h_slots)
/// shortcut is 1x1, body 3x3(x3). Fewer than `slots` entries are zero-padded.
struct HistoryMerge {
  std::size_t slots = 0;
  ConvBlock shortcut;
  ConvBlock body;

  static HistoryMerge seeded(std::size_t spatial_dims, std::size_t channels, std::size_t slots,
                             CounterRng& rng);
  /// Shortcut copies the first (most recent) entry; body is zero.
  static HistoryMerge identity(std::size_t spatial_dims, std::size_t channels, std::size_t slots);
};

Tensor merge_history_voxel(std::span<const Tensor> aligned, const HistoryMerge& merge);
Tensor merge_history_bev(std::span<const Tensor> aligned, const HistoryMerge& merge);

/// out_p = DA3D(cur_p, p, current) + DA3D(cur_p, p, hist): a plain sum over the
/// two value maps, with the query taken from the current frame and the
/// reference at the voxel's own lattice position.
Tensor fuse_temporal_voxel(const Tensor& current, const Tensor& hist, const RefGrid3D& grid,
                           const DeformAttnParams& params);
Tensor fuse_temporal_bev(const Tensor& current, const Tensor& hist, const RefGrid2D& grid,
                         const DeformAttnParams& params);

struct TemporalEntry {
  Tensor voxel;
  Tensor bev;
  Pose pose;
};

/// FIFO of pre-fusion features, most recent first, bounded by `capacity`.
class TemporalBuffer {
 public:
  explicit TemporalBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const TemporalEntry& operator[](std::size_t i) const { return entries_[i]; }

  void push(TemporalEntry entry);
  /// Drops all history, e.g. at a scene boundary.
  void clear() noexcept { entries_.clear(); }

  /// Writes vox_<i>.dtns, bev_<i>.dtns and poses.txt into `dir`.
  void save(const std::filesystem::path& dir) const;
  static TemporalBuffer load(const std::filesystem::path& dir, std::size_t capacity);

 private:
  std::size_t capacity_;
  std::deque<TemporalEntry> entries_;
};

struct TemporalModule {
  HistoryMerge voxel_merge;
  HistoryMerge bev_merge;
  DeformAttnParams voxel_attention;  // dims = 3
  DeformAttnParams bev_attention;    // dims = 2

  static TemporalModule seeded(std::size_t voxel_channels, std::size_t bev_channels,
                               std::size_t history, std::size_t heads, std::size_t points,
                               CounterRng& rng);
};

struct DteOutput {
  Tensor voxel;
  Tensor bev;
};

/// One frame of the dual-branch temporal encoder. With an empty buffer the
/// current features pass through unchanged. The buffer then receives the
/// current (pre-fusion) features. Throws std::invalid_argument without a pose.
DteOutput dte_step(TemporalBuffer& buffer, const Tensor& current_voxel,
                   const Tensor& current_bev, const std::optional<Pose>& pose,
                   const RefGrid3D& voxel_grid, const RefGrid2D& bev_grid,
                   const TemporalModule& module);

}  // namespace radocc
