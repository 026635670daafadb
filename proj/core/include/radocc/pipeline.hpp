#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radocc/config.hpp"
#include "radocc/fusion.hpp"
#include "radocc/heads.hpp"
#include "radocc/losses.hpp"
#include "radocc/metrics.hpp"
#include "radocc/radar.hpp"
#include "radocc/scene_io.hpp"
#include "radocc/temporal.hpp"
#include "radocc/view_transform.hpp"

namespace radocc {

/// All learned parameters, seeded from the config seed.
struct Model {
  PillarEncoder pillar;
  BevBackbone backbone;
  RadarQueryBranch radar_query;
  VoxelEncoder encoder;
  TemporalModule temporal;
  FusionModule fusion;
  DetectionHead detection;
  OccupancyHead occupancy;

  static Model seeded(const PipelineConfig& config);
};

inline constexpr std::array<std::string_view, 11> kDumpStages = {
    "radar_bev",    "camera",    "queries",   "voxel",   "temporal_voxel", "temporal_bev",
    "fused_voxel",  "fused_bev", "aux_occ",   "aux_seg", "occ_logits"};

bool is_dump_stage(std::string_view stage);
/// Comma-separated list of valid stage names.
std::string dump_stage_list();

struct FrameOutputs {
  std::size_t radar_points = 0;
  std::size_t skipped_zero_range = 0;
  Tensor radar_bev;                // C_R x H_bev x W_bev
  std::vector<Tensor> camera;      // per camera, C x H_C x W_C
  Tensor queries;                  // C x H_V x W_V x Z_V
  Tensor voxel;                    // encoder output
  Tensor temporal_voxel;
  Tensor temporal_bev;
  FusedFeatures fused;
  Tensor occ_logits;               // 12 x H x W x Z
  DetectionOutput detection;
  BoxSet boxes;                    // top-k decoded
  std::vector<int> occ_pred;
  std::optional<LossReport> loss;
};

/// Checks scene contents against the config before any frame is processed.
void validate_scene(const PipelineConfig& config, const SceneData& scene);

/// Accumulated, compensated radar cloud for frame t from up to
/// `config.radar_sweeps` most recent sweeps of every mount.
AccumulatedCloud accumulate_radar(const PipelineConfig& config, const SceneData& scene,
                                  std::size_t t);

FrameOutputs process_frame(const PipelineConfig& config, const Model& model,
                           const SceneData& scene, std::size_t t, TemporalBuffer& buffer);

/// Writes <stage>_FFFF.dtns plus a PGM preview (per camera for "camera").
void dump_stage(const FrameOutputs& out, std::string_view stage, std::size_t frame,
                const std::filesystem::path& dir);

struct RunOptions {
  std::optional<std::string> dump_stage;
  std::filesystem::path dump_dir = "dumps";
  /// When set, predictions are written here as JSON lines, with occupancy
  /// label dumps next to it.
  std::optional<std::filesystem::path> predictions;
};

struct RunResult {
  std::string report_json;
  std::string pr_csv;
  DetEval detection;
  OccEval occupancy;
  std::vector<Shape> last_shapes;  // one per dump stage (first camera for "camera")
};

RunResult run_pipeline(const PipelineConfig& config, const SceneData& scene,
                       const RunOptions& options = {});

}  // namespace radocc
