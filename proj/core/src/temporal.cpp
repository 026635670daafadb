#include "radocc/temporal.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "radocc/tensor_io.hpp"

namespace radocc {

namespace {

bool same_pose(const Pose& a, const Pose& b) {
  return a.rotation == b.rotation && a.translation == b.translation;
}

}  // namespace

Tensor align_history_voxel(const Tensor& hist, const RefGrid3D& grid, const Pose& pose_t,
                           const Pose& pose_hist) {
  const Extent3 e = grid.extent;
  if (hist.rank() != 4 || hist.dim(1) != e.h || hist.dim(2) != e.w || hist.dim(3) != e.z) {
    throw std::invalid_argument("align_history_voxel: history does not match the voxel grid");
  }
  if (same_pose(pose_t, pose_hist)) return hist;
  const Pose rel = pose_hist.inverse() * pose_t;
  const std::size_t c = hist.dim(0);
  const std::size_t cells = grid.cell_count();
  Tensor out(hist.shape());
  std::vector<double> col(c);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < e.h; ++i) {
    for (std::size_t j = 0; j < e.w; ++j) {
      for (std::size_t k = 0; k < e.z; ++k, ++idx) {
        const Point3 g = grid.to_grid(rel.apply(grid.center(i, j, k)));
        std::fill(col.begin(), col.end(), 0.0);
        trilinear_accumulate(hist, 0, c, snap_to_lattice(g.x), snap_to_lattice(g.y),
                             snap_to_lattice(g.z), 1.0, col);
        for (std::size_t ch = 0; ch < c; ++ch) out[ch * cells + idx] = col[ch];
      }
    }
  }
  return out;
}

Tensor align_history_bev(const Tensor& hist, const RefGrid2D& grid, const Pose& pose_t,
                         const Pose& pose_hist) {
  const Extent2 e = grid.extent;
  if (hist.rank() != 3 || hist.dim(1) != e.h || hist.dim(2) != e.w) {
    throw std::invalid_argument("align_history_bev: history does not match the BEV grid");
  }
  if (same_pose(pose_t, pose_hist)) return hist;
  const Pose rel = pose_hist.inverse() * pose_t;
  const std::size_t c = hist.dim(0);
  const std::size_t cells = e.h * e.w;
  Tensor out(hist.shape());
  std::vector<double> col(c);
  for (std::size_t i = 0; i < e.h; ++i) {
    for (std::size_t j = 0; j < e.w; ++j) {
      const Point2 g = grid.to_grid(rel.apply(grid.center(i, j)));
      std::fill(col.begin(), col.end(), 0.0);
      bilinear_accumulate(hist, 0, c, snap_to_lattice(g.x), snap_to_lattice(g.y), 1.0, col);
      for (std::size_t ch = 0; ch < c; ++ch) out[ch * cells + i * e.w + j] = col[ch];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

HistoryMerge HistoryMerge::seeded(std::size_t spatial_dims, std::size_t channels,
                                  std::size_t slots, CounterRng& rng) {
  if (slots == 0) throw std::invalid_argument("HistoryMerge: slots must be >= 1");
  return {slots, ConvBlock::seeded(spatial_dims, channels, channels * slots, 1, false, rng),
          ConvBlock::seeded(spatial_dims, channels, channels * slots, 3, true, rng, 0.5)};
}

HistoryMerge HistoryMerge::identity(std::size_t spatial_dims, std::size_t channels,
                                    std::size_t slots) {
  if (slots == 0) throw std::invalid_argument("HistoryMerge: slots must be >= 1");
  HistoryMerge m{slots, ConvBlock::zeros(spatial_dims, channels, channels * slots, 1, false),
                 ConvBlock::zeros(spatial_dims, channels, channels * slots, 3, true)};
  for (std::size_t c = 0; c < channels; ++c) {
    if (spatial_dims == 2) {
      m.shortcut.kernel.at(c, c, 0, 0) = 1.0;
    } else {
      m.shortcut.kernel.at(c, c, 0, 0, 0) = 1.0;
    }
  }
  return m;
}

namespace {

Tensor merge_history(std::span<const Tensor> aligned, const HistoryMerge& merge,
                     std::size_t rank, const char* what) {
  if (aligned.empty()) throw std::invalid_argument(std::string(what) + ": no history entries");
  if (aligned.size() > merge.slots) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(aligned.size()) +
                                " entries exceed " + std::to_string(merge.slots) + " slots");
  }
  if (aligned[0].rank() != rank) {
    throw std::invalid_argument(std::string(what) + ": wrong history rank");
  }
  const Tensor zeros(aligned[0].shape());
  std::vector<const Tensor*> parts;
  for (std::size_t s = 0; s < merge.slots; ++s) {
    parts.push_back(s < aligned.size() ? &aligned[s] : &zeros);
  }
  const Tensor x = concat_channels(parts);
  return add(merge.shortcut.forward(x), merge.body.forward(x));
}

template <std::size_t Dims>
Tensor fuse_temporal(const Tensor& current, const Tensor& hist, const DeformAttnParams& params,
                     const char* what) {
  if (current.shape() != hist.shape()) {
    throw std::invalid_argument(std::string(what) + ": current and history shapes differ");
  }
  if (params.dims != Dims || current.rank() != Dims + 1 || current.dim(0) != params.channels) {
    throw std::invalid_argument(std::string(what) + ": attention params do not match features");
  }
  const std::size_t c = current.dim(0);
  const std::size_t cells = current.plane_size();
  const Tensor v_cur = project_values(current, params);
  const Tensor v_hist = project_values(hist, params);
  Tensor out(current.shape());
  std::vector<double> query(c), a(c), b(c);
  std::array<double, Dims> ref{};
  std::array<std::size_t, Dims + 1> ext{};
  for (std::size_t d = 0; d <= Dims; ++d) ext[d] = current.dim(d);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    // Lattice position of idx: rows -> y, cols -> x, layers -> z.
    std::size_t rem = idx;
    if constexpr (Dims == 3) {
      const std::size_t k = rem % ext[3];
      rem /= ext[3];
      ref[2] = static_cast<double>(k);
    }
    const std::size_t j = rem % ext[2];
    const std::size_t i = rem / ext[2];
    ref[0] = static_cast<double>(j);
    ref[1] = static_cast<double>(i);
    for (std::size_t ch = 0; ch < c; ++ch) query[ch] = current[ch * cells + idx];
    deform_attn_projected(query, ref, v_cur, params, a);
    deform_attn_projected(query, ref, v_hist, params, b);
    for (std::size_t ch = 0; ch < c; ++ch) out[ch * cells + idx] = a[ch] + b[ch];
  }
  return out;
}

}  // namespace

Tensor merge_history_voxel(std::span<const Tensor> aligned, const HistoryMerge& merge) {
  return merge_history(aligned, merge, 4, "merge_history_voxel");
}

Tensor merge_history_bev(std::span<const Tensor> aligned, const HistoryMerge& merge) {
  return merge_history(aligned, merge, 3, "merge_history_bev");
}

Tensor fuse_temporal_voxel(const Tensor& current, const Tensor& hist, const RefGrid3D& grid,
                           const DeformAttnParams& params) {
  if (current.rank() != 4 || current.dim(1) != grid.extent.h || current.dim(2) != grid.extent.w ||
      current.dim(3) != grid.extent.z) {
    throw std::invalid_argument("fuse_temporal_voxel: features do not match the grid");
  }
  return fuse_temporal<3>(current, hist, params, "fuse_temporal_voxel");
}

Tensor fuse_temporal_bev(const Tensor& current, const Tensor& hist, const RefGrid2D& grid,
                         const DeformAttnParams& params) {
  if (current.rank() != 3 || current.dim(1) != grid.extent.h || current.dim(2) != grid.extent.w) {
    throw std::invalid_argument("fuse_temporal_bev: features do not match the grid");
  }
  return fuse_temporal<2>(current, hist, params, "fuse_temporal_bev");
}

// ---------------------------------------------------------------------------

void TemporalBuffer::push(TemporalEntry entry) {
  if (capacity_ == 0) return;
  entries_.push_front(std::move(entry));
  while (entries_.size() > capacity_) entries_.pop_back();
}

void TemporalBuffer::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream poses(dir / "poses.txt");
  if (!poses) throw std::runtime_error("cannot write " + (dir / "poses.txt").string());
  poses << std::setprecision(std::numeric_limits<double>::max_digits10);
  poses << "# index r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2\n";
  std::array<double, 12> m{};
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    save_tensor_binary(dir / ("vox_" + std::to_string(i) + ".dtns"), entries_[i].voxel);
    save_tensor_binary(dir / ("bev_" + std::to_string(i) + ".dtns"), entries_[i].bev);
    entries_[i].pose.to_row_major(m);
    poses << i;
    for (double v : m) poses << ' ' << v;
    poses << '\n';
  }
}

TemporalBuffer TemporalBuffer::load(const std::filesystem::path& dir, std::size_t capacity) {
  std::ifstream poses(dir / "poses.txt");
  if (!poses) throw std::runtime_error("cannot read " + (dir / "poses.txt").string());
  std::vector<TemporalEntry> entries;
  std::string line;
  while (std::getline(poses, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::size_t idx;
    std::array<double, 12> m{};
    if (!(ls >> idx)) throw std::runtime_error("poses.txt: malformed line");
    for (auto& v : m) {
      if (!(ls >> v)) throw std::runtime_error("poses.txt: expected 12 numbers");
    }
    entries.push_back({load_tensor_binary(dir / ("vox_" + std::to_string(idx) + ".dtns")),
                       load_tensor_binary(dir / ("bev_" + std::to_string(idx) + ".dtns")),
                       Pose::from_row_major(m)});
  }
  TemporalBuffer buf(capacity);
  // Entries were saved most recent first; push oldest first to restore order.
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) buf.push(std::move(*it));
  return buf;
}

TemporalModule TemporalModule::seeded(std::size_t voxel_channels, std::size_t bev_channels,
                                      std::size_t history, std::size_t heads,
                                      std::size_t points, CounterRng& rng) {
  const std::size_t slots = history == 0 ? 1 : history;
  TemporalModule m;
  m.voxel_merge = HistoryMerge::seeded(3, voxel_channels, slots, rng);
  m.bev_merge = HistoryMerge::seeded(2, bev_channels, slots, rng);
  m.voxel_attention = DeformAttnParams::seeded(voxel_channels, heads, points, 3, rng);
  m.bev_attention = DeformAttnParams::seeded(bev_channels, heads, points, 2, rng);
  // Two value maps are summed; halve the output scale to keep magnitudes.
  for (auto* attn : {&m.voxel_attention, &m.bev_attention}) {
    for (auto& w : attn->output_proj.weight.data()) w *= 0.5;
  }
  return m;
}

DteOutput dte_step(TemporalBuffer& buffer, const Tensor& current_voxel,
                   const Tensor& current_bev, const std::optional<Pose>& pose,
                   const RefGrid3D& voxel_grid, const RefGrid2D& bev_grid,
                   const TemporalModule& module) {
  if (!pose) throw std::invalid_argument("dte_step: current frame has no ego pose");
  DteOutput out;
  if (buffer.empty()) {
    out = {current_voxel, current_bev};
  } else {
    std::vector<Tensor> vox, bev;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      vox.push_back(align_history_voxel(buffer[i].voxel, voxel_grid, *pose, buffer[i].pose));
      bev.push_back(align_history_bev(buffer[i].bev, bev_grid, *pose, buffer[i].pose));
    }
    const Tensor hist_vox = merge_history_voxel(vox, module.voxel_merge);
    const Tensor hist_bev = merge_history_bev(bev, module.bev_merge);
    out.voxel = fuse_temporal_voxel(current_voxel, hist_vox, voxel_grid, module.voxel_attention);
    out.bev = fuse_temporal_bev(current_bev, hist_bev, bev_grid, module.bev_attention);
  }
  buffer.push({current_voxel, current_bev, *pose});
  return out;
}

}  // namespace radocc
