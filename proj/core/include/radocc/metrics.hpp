#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "radocc/heads.hpp"

namespace radocc {

/// Greedy matching for one frame: predictions in descending score order
/// (ties by index) each take the nearest unmatched same-class ground-truth
/// box whose planar center distance is below `threshold`.
struct FrameMatch {
  std::vector<int> pred_to_gt;  // -1 for false positives
  std::vector<bool> gt_matched;
};

FrameMatch match_by_center_distance(const BoxSet& preds, const BoxSet& gts, double threshold);

double center_distance(const Box3D& a, const Box3D& b);

struct DetFrame {
  BoxSet preds;
  BoxSet gts;
};

struct PrPoint {
  double score;
  double recall;
  double precision;
};

/// Precision/recall sweep for one class over all frames.
std::vector<PrPoint> pr_curve(std::span<const DetFrame> frames, int label, double threshold);

/// Trapezoidal area under the sweep, anchored at (recall 0, first precision).
/// std::nullopt when the class has no ground truth.
std::optional<double> average_precision(std::span<const DetFrame> frames, int label,
                                        double threshold);

struct TpErrors {
  double ate = 0.0;
  double ase = 0.0;
  double aoe = 0.0;
  double ave = 0.0;
  std::size_t count = 0;
};

/// 1 - IoU of the two boxes after aligning centers and yaw.
double aligned_size_error(const Box3D& pred, const Box3D& gt);
/// |yaw difference| wrapped to [0, pi].
double yaw_error(const Box3D& pred, const Box3D& gt);
/// Mean errors over (pred, gt) pairs; all zero for an empty list.
TpErrors true_positive_errors(std::span<const std::pair<Box3D, Box3D>> pairs);

/// (4 mAP + sum(1 - min(1, mTP))) / 8.
double ods(double map, double mate, double mase, double maoe, double mave);

struct DetEval {
  std::vector<double> thresholds;
  /// ap[label][threshold index]; nullopt for classes without ground truth.
  std::vector<std::vector<std::optional<double>>> ap;
  std::vector<std::optional<double>> class_ap;  // mean over thresholds
  double map = 0.0;
  double mate = 1.0;
  double mase = 1.0;
  double maoe = 1.0;
  double mave = 1.0;
  double ods = 0.0;
};

DetEval evaluate_detection(std::span<const DetFrame> frames, std::span<const double> thresholds,
                           std::size_t num_classes = kNumDetClasses);

struct OccEval {
  /// iou[c] for c in 1..11 (index 0 unused); nullopt if absent in both grids.
  std::vector<std::optional<double>> iou;
  double miou = 0.0;
  double sc_iou = 0.0;
  std::size_t evaluated_classes = 0;
};

/// Per-class IoU = TP / (TP + FP + FN). Scene completion IoU treats every
/// non-free label as occupied. Empty averages and empty unions count as 1.
OccEval occupancy_iou(std::span<const int> pred, std::span<const int> gt,
                      std::size_t num_classes = kNumOccClasses);

}  // namespace radocc
