#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "radocc/geometry.hpp"
#include "radocc/losses.hpp"
#include "radocc/synthscene.hpp"

namespace radocc {

struct PipelineConfig {
  GridBounds bounds{{-60.0, 60.0}, {-40.0, 40.0}, {-3.0, 5.0}};
  Extent3 voxel{20, 30, 4};
  Extent2 bev{40, 60};
  Extent3 occ{40, 60, 8};
  std::size_t frames = 2;  // T; the temporal buffer holds T - 1 entries
  std::size_t encoder_layers = 1;
  std::size_t heads = 4;
  std::size_t points = 4;
  std::size_t channels = 16;        // C
  std::size_t radar_channels = 16;  // C_R
  std::size_t occ_hidden = 32;
  std::size_t queries = 900;
  std::size_t top_k = 300;
  std::size_t radar_sweeps = 3;
  std::uint64_t seed = 0;
  LossWeights loss;
  std::vector<double> thresholds{1.0, 2.0, 4.0};
  SynthConfig synth = desk_synth();

  /// Reduced extents for quick runs: 2 cameras, 20 x 30 x 4 voxels.
  static PipelineConfig desk();
  /// Full resolution: 80 x 120 x 8 voxels, 160 x 240 BEV, 160 x 240 x 16
  /// occupancy, 6 cameras, T = 4. Slow.
  static PipelineConfig paper_scale();

  /// Throws std::invalid_argument naming the key and the violated rule.
  void validate() const;

  RefGrid3D voxel_grid() const { return make_ref_grid_3d(bounds, voxel); }
  RefGrid2D bev_grid() const { return make_ref_grid_2d(bounds, bev); }
  RefGrid3D occ_grid() const { return make_ref_grid_3d(bounds, occ); }

 private:
  static SynthConfig desk_synth();
};

/// Overrides fields of `base` with the keys present in a JSON document.
/// Unknown keys are rejected. The result is validated.
PipelineConfig parse_config(const std::string& json_text, PipelineConfig base,
                            const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base);
/// Canonical JSON for a config (the same keys parse_config accepts).
std::string config_to_json(const PipelineConfig& config);

}  // namespace radocc
