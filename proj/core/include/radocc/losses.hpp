#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "radocc/heads.hpp"
#include "radocc/matching.hpp"
#include "radocc/tensor.hpp"

namespace radocc {

/// A scalar loss and its gradient with respect to the first argument.
struct LossValue {
  double value = 0.0;
  std::vector<double> grad;
};

struct LossWeights {
  double lambda_cls = 2.0;
  double lambda_reg = 0.25;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

/// Sigmoid focal loss on probabilities with binary targets, summed and
/// divided by max(1, number of positives).
LossValue focal_loss(std::span<const double> probs, std::span<const double> targets,
                     double alpha = 0.25, double gamma = 2.0);

/// Sum of |pred - target| divided by `boxes` (mean over boxes).
LossValue l1_loss(std::span<const double> pred, std::span<const double> target,
                  std::size_t boxes);

/// Mean cross-entropy over cells. `logits` is K x cells (class-first, any
/// trailing shape); gradient is with respect to the logits.
LossValue cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Scene-level geometry affinity (class 0 = empty): -log of precision,
/// recall and specificity of the occupied/empty split.
LossValue scal_geo(const Tensor& logits, std::span<const int> labels);

/// Class-wise affinity: for every class present in the labels, -log of its
/// precision, recall and specificity, averaged over those classes.
LossValue scal_sem(const Tensor& logits, std::span<const int> labels);

struct OccLoss {
  double ce = 0.0;
  double geo = 0.0;
  double sem = 0.0;
  double total = 0.0;
  std::vector<double> grad;
};

OccLoss occupancy_loss(const Tensor& logits, std::span<const int> labels);

/// Mean binary cross-entropy; log arguments clamped to [1e-12, 1].
LossValue bce_loss(std::span<const double> probs, std::span<const double> targets);
/// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps).
LossValue dice_loss(std::span<const double> probs, std::span<const double> targets,
                    double eps = 1.0);
LossValue bce_dice(std::span<const double> probs, std::span<const double> targets);

struct DetLoss {
  double cls = 0.0;
  double reg = 0.0;
  double total = 0.0;
  Assignment assignment;  // ground truth -> prediction index
};

/// Hungarian-matched set loss. `preds` must carry class_probs.
DetLoss detection_loss(const BoxSet& preds, const BoxSet& gt, const LossWeights& w);

struct LossReport {
  DetLoss det;
  OccLoss occ;
  double aux_occ = 0.0;
  double aux_seg = 0.0;
  double aux = 0.0;
  double total = 0.0;
};

double total_loss(double det, double occ, double aux);

}  // namespace radocc
