#include "radocc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

namespace radocc {

double center_distance(const Box3D& a, const Box3D& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

std::vector<std::size_t> score_order(const BoxSet& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });
  return order;
}

}  // namespace

FrameMatch match_by_center_distance(const BoxSet& preds, const BoxSet& gts, double threshold) {
  FrameMatch m{std::vector<int>(preds.size(), -1), std::vector<bool>(gts.size(), false)};
  for (std::size_t p : score_order(preds)) {
    int best = -1;
    double best_d = threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.gt_matched[g] || gts[g].label != preds[p].label) continue;
      const double d = center_distance(preds[p], gts[g]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      m.pred_to_gt[p] = best;
      m.gt_matched[static_cast<std::size_t>(best)] = true;
    }
  }
  return m;
}

namespace {

struct ClassSweep {
  std::size_t gt_count = 0;
  // (score, frame, pred index, is_tp)
  std::vector<std::tuple<double, std::size_t, std::size_t, bool>> dets;
};

BoxSet filter_label(const BoxSet& boxes, int label) {
  BoxSet out;
  for (const auto& b : boxes) {
    if (b.label == label) out.push_back(b);
  }
  return out;
}

ClassSweep sweep(std::span<const DetFrame> frames, int label, double threshold) {
  ClassSweep s;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const BoxSet preds = filter_label(frames[f].preds, label);
    const BoxSet gts = filter_label(frames[f].gts, label);
    s.gt_count += gts.size();
    const FrameMatch m = match_by_center_distance(preds, gts, threshold);
    for (std::size_t p = 0; p < preds.size(); ++p) {
      s.dets.emplace_back(preds[p].score, f, p, m.pred_to_gt[p] >= 0);
    }
  }
  std::stable_sort(s.dets.begin(), s.dets.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  return s;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const DetFrame> frames, int label, double threshold) {
  const ClassSweep s = sweep(frames, label, threshold);
  std::vector<PrPoint> curve;
  if (s.gt_count == 0) return curve;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < s.dets.size(); ++i) {
    if (std::get<3>(s.dets[i])) ++tp;
    curve.push_back({std::get<0>(s.dets[i]),
                     static_cast<double>(tp) / static_cast<double>(s.gt_count),
                     static_cast<double>(tp) / static_cast<double>(i + 1)});
  }
  return curve;
}

std::optional<double> average_precision(std::span<const DetFrame> frames, int label,
                                        double threshold) {
  const ClassSweep s = sweep(frames, label, threshold);
  if (s.gt_count == 0) return std::nullopt;
  const std::vector<PrPoint> curve = pr_curve(frames, label, threshold);
  if (curve.empty()) return 0.0;
  double area = 0.0;
  double r0 = 0.0, p0 = curve.front().precision;
  for (const auto& pt : curve) {
    area += (pt.recall - r0) * 0.5 * (pt.precision + p0);
    r0 = pt.recall;
    p0 = pt.precision;
  }
  return std::clamp(area, 0.0, 1.0);
}

double aligned_size_error(const Box3D& pred, const Box3D& gt) {
  const double inter =
      std::min(pred.l, gt.l) * std::min(pred.w, gt.w) * std::min(pred.h, gt.h);
  const double uni = pred.l * pred.w * pred.h + gt.l * gt.w * gt.h - inter;
  return uni > 0.0 ? 1.0 - inter / uni : 1.0;
}

double yaw_error(const Box3D& pred, const Box3D& gt) {
  double d = std::fmod(std::abs(pred.yaw() - gt.yaw()), 2.0 * std::numbers::pi);
  if (d > std::numbers::pi) d = 2.0 * std::numbers::pi - d;
  return d;
}

TpErrors true_positive_errors(std::span<const std::pair<Box3D, Box3D>> pairs) {
  TpErrors e;
  for (const auto& [p, g] : pairs) {
    e.ate += center_distance(p, g);
    e.ase += aligned_size_error(p, g);
    e.aoe += yaw_error(p, g);
    e.ave += std::hypot(p.vx - g.vx, p.vy - g.vy);
  }
  e.count = pairs.size();
  if (e.count > 0) {
    const double inv = 1.0 / static_cast<double>(e.count);
    e.ate *= inv;
    e.ase *= inv;
    e.aoe *= inv;
    e.ave *= inv;
  }
  return e;
}

double ods(double map, double mate, double mase, double maoe, double mave) {
  double tp = 0.0;
  for (double e : {mate, mase, maoe, mave}) tp += 1.0 - std::min(1.0, e);
  return (4.0 * map + tp) / 8.0;
}

DetEval evaluate_detection(std::span<const DetFrame> frames, std::span<const double> thresholds,
                           std::size_t num_classes) {
  if (thresholds.empty()) throw std::invalid_argument("evaluate_detection: no thresholds");
  for (double t : thresholds) {
    if (!(t > 0.0)) throw std::invalid_argument("evaluate_detection: thresholds must be > 0");
  }
  DetEval ev;
  ev.thresholds.assign(thresholds.begin(), thresholds.end());
  ev.ap.resize(num_classes);
  ev.class_ap.resize(num_classes);
  double map_sum = 0.0;
  std::size_t map_n = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    double sum = 0.0;
    bool has_gt = false;
    for (double t : thresholds) {
      auto ap = average_precision(frames, static_cast<int>(c), t);
      ev.ap[c].push_back(ap);
      if (ap) {
        has_gt = true;
        sum += *ap;
      }
    }
    if (has_gt) {
      ev.class_ap[c] = sum / static_cast<double>(thresholds.size());
      map_sum += *ev.class_ap[c];
      ++map_n;
    }
  }
  ev.map = map_n > 0 ? map_sum / static_cast<double>(map_n) : 0.0;

  // True-positive errors at the most permissive threshold, per class then averaged.
  const double tmax = *std::max_element(thresholds.begin(), thresholds.end());
  double ate = 0.0, ase = 0.0, aoe = 0.0, ave = 0.0;
  std::size_t classes_with_tp = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::pair<Box3D, Box3D>> pairs;
    for (const auto& frame : frames) {
      const BoxSet preds = filter_label(frame.preds, static_cast<int>(c));
      const BoxSet gts = filter_label(frame.gts, static_cast<int>(c));
      const FrameMatch m = match_by_center_distance(preds, gts, tmax);
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (m.pred_to_gt[p] >= 0) {
          pairs.emplace_back(preds[p], gts[static_cast<std::size_t>(m.pred_to_gt[p])]);
        }
      }
    }
    if (pairs.empty()) continue;
    const TpErrors e = true_positive_errors(pairs);
    ate += e.ate;
    ase += e.ase;
    aoe += e.aoe;
    ave += e.ave;
    ++classes_with_tp;
  }
  if (classes_with_tp > 0) {
    const double inv = 1.0 / static_cast<double>(classes_with_tp);
    ev.mate = ate * inv;
    ev.mase = ase * inv;
    ev.maoe = aoe * inv;
    ev.mave = ave * inv;
  }
  ev.ods = ods(ev.map, ev.mate, ev.mase, ev.maoe, ev.mave);
  return ev;
}

OccEval occupancy_iou(std::span<const int> pred, std::span<const int> gt,
                      std::size_t num_classes) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("occupancy_iou: grids differ in size (" +
                                std::to_string(pred.size()) + " vs " + std::to_string(gt.size()) +
                                ")");
  }
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  std::size_t sc_tp = 0, sc_union = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i], g = gt[i];
    if (p < 0 || g < 0 || static_cast<std::size_t>(p) >= num_classes ||
        static_cast<std::size_t>(g) >= num_classes) {
      throw std::invalid_argument("occupancy_iou: label out of range at cell " +
                                  std::to_string(i));
    }
    if (p == g) {
      ++tp[static_cast<std::size_t>(p)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(g)];
    }
    const bool po = p != kOccFree, go = g != kOccFree;
    if (po && go) ++sc_tp;
    if (po || go) ++sc_union;
  }
  OccEval ev;
  ev.iou.resize(num_classes);
  double sum = 0.0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    const std::size_t den = tp[c] + fp[c] + fn[c];
    if (den == 0) continue;
    ev.iou[c] = static_cast<double>(tp[c]) / static_cast<double>(den);
    sum += *ev.iou[c];
    ++ev.evaluated_classes;
  }
  ev.miou = ev.evaluated_classes > 0 ? sum / static_cast<double>(ev.evaluated_classes) : 1.0;
  ev.sc_iou =
      sc_union > 0 ? static_cast<double>(sc_tp) / static_cast<double>(sc_union) : 1.0;
  return ev;
}

}  // namespace radocc
