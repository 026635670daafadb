#include "radocc/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radocc {

std::string_view object_class_name(int label) {
  static constexpr std::array<std::string_view, kNumDetClasses> names = {
      "car", "pedestrian", "rider", "large_vehicle"};
  if (label < 0 || static_cast<std::size_t>(label) >= names.size()) return "unknown";
  return names[static_cast<std::size_t>(label)];
}

std::string_view occ_class_name(int label) {
  static constexpr std::array<std::string_view, kNumOccClasses> names = {
      "free",          "car",           "pedestrian",   "rider",
      "large_vehicle", "cycle",         "road_obstacle", "traffic_fence",
      "driveable_surface", "sidewalk", "vegetation",   "manmade"};
  if (label < 0 || static_cast<std::size_t>(label) >= names.size()) return "unknown";
  return names[static_cast<std::size_t>(label)];
}

double Box3D::yaw() const { return std::atan2(sin_yaw, cos_yaw); }

std::array<double, kBoxParams> Box3D::params() const {
  return {x, y, z, l, w, h, cos_yaw, sin_yaw, vx, vy};
}

Box3D Box3D::from_params(std::span<const double> p, int label, double score) {
  if (p.size() != kBoxParams) throw std::invalid_argument("Box3D: expected 10 parameters");
  Box3D b;
  b.x = p[0];
  b.y = p[1];
  b.z = p[2];
  b.l = p[3];
  b.w = p[4];
  b.h = p[5];
  b.cos_yaw = p[6];
  b.sin_yaw = p[7];
  b.vx = p[8];
  b.vy = p[9];
  b.label = label;
  b.score = score;
  return b;
}

// ---------------------------------------------------------------------------

DetectionHead DetectionHead::seeded(std::size_t channels, std::size_t queries, Extent2 bev,
                                    std::size_t heads, std::size_t points, CounterRng& rng) {
  if (queries == 0) throw std::invalid_argument("DetectionHead: need at least one query");
  DetectionHead head;
  head.query_embed = Tensor({queries, channels});
  for (auto& v : head.query_embed.data()) v = rng.uniform(-1.0, 1.0);
  head.reference.reserve(queries);
  for (std::size_t q = 0; q < queries; ++q) {
    const double col = rng.uniform(0.0, static_cast<double>(bev.w)) - 0.5;
    const double row = rng.uniform(0.0, static_cast<double>(bev.h)) - 0.5;
    head.reference.push_back({col, row});
  }
  head.attention = DeformAttnParams::seeded(channels, heads, points, 2, rng);
  head.hidden = Linear::seeded(channels, channels, rng);
  head.cls = Linear::seeded(kNumDetClasses, channels, rng);
  head.box = Linear::seeded(kBoxParams, channels, rng);
  return head;
}

DetectionOutput detection_head(const Tensor& bev, const DetectionHead& head) {
  if (bev.rank() != 3) throw std::invalid_argument("detection_head: BEV must be C x H x W");
  const std::size_t c = head.attention.channels;
  if (bev.dim(0) != c || head.query_embed.dim(1) != c) {
    throw std::invalid_argument("detection_head: channel mismatch");
  }
  const std::size_t nq = head.queries();
  const Tensor value = project_values(bev, head.attention);
  DetectionOutput out{Tensor({nq, kNumDetClasses}), Tensor({nq, kBoxParams})};
  std::vector<double> feat(c), hid(c);
  for (std::size_t q = 0; q < nq; ++q) {
    std::span<const double> query(head.query_embed.data().data() + q * c, c);
    const double ref[2] = {head.reference[q].x, head.reference[q].y};
    deform_attn_projected(query, ref, value, head.attention, feat);
    head.hidden.apply(feat, hid);
    for (auto& v : hid) v = std::max(0.0, v);
    head.cls.apply(hid, out.logits.data().subspan(q * kNumDetClasses, kNumDetClasses));
    head.box.apply(hid, out.boxes.data().subspan(q * kBoxParams, kBoxParams));
  }
  return out;
}

BoxSet decode_detections(const DetectionOutput& out, const DetectionHead& head,
                         const RefGrid2D& grid, std::size_t top_k) {
  const std::size_t nq = out.logits.dim(0);
  if (nq != head.queries() || out.boxes.dim(0) != nq) {
    throw std::invalid_argument("decode_detections: output does not match the head");
  }
  BoxSet boxes;
  boxes.reserve(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    std::vector<double> probs(kNumDetClasses);
    for (std::size_t k = 0; k < kNumDetClasses; ++k) {
      probs[k] = sigmoid(out.logits.at(q, k));
    }
    const auto best = std::max_element(probs.begin(), probs.end());
    std::array<double, kBoxParams> p{};
    for (std::size_t i = 0; i < kBoxParams; ++i) p[i] = out.boxes.at(q, i);
    const double ref_x = grid.x.min + (head.reference[q].x + 0.5) * grid.cell_x();
    const double ref_y = grid.y.min + (head.reference[q].y + 0.5) * grid.cell_y();
    p[0] += ref_x;
    p[1] += ref_y;
    for (std::size_t i = 3; i < 6; ++i) p[i] = std::max(0.01, std::abs(p[i]));
    const double n = std::hypot(p[6], p[7]);
    if (n > 0.0) {
      p[6] /= n;
      p[7] /= n;
    } else {
      p[6] = 1.0;
      p[7] = 0.0;
    }
    Box3D b = Box3D::from_params(p, static_cast<int>(best - probs.begin()), *best);
    b.class_probs = std::move(probs);
    boxes.push_back(std::move(b));
  }
  std::vector<std::size_t> order(nq);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score > boxes[b].score;
  });
  BoxSet kept;
  const std::size_t n = std::min(top_k, nq);
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) kept.push_back(std::move(boxes[order[i]]));
  return kept;
}

// ---------------------------------------------------------------------------

OccupancyHead OccupancyHead::seeded(std::size_t channels, std::size_t hidden, CounterRng& rng) {
  return {Linear::seeded(hidden, channels, rng), Linear::seeded(kNumOccClasses, hidden, rng)};
}

Tensor occupancy_head(const Tensor& voxel, const OccupancyHead& head) {
  if (voxel.rank() != 4) throw std::invalid_argument("occupancy_head: expected C x H x W x Z");
  return apply_pointwise(head.out, relu(apply_pointwise(head.hidden, voxel)));
}

std::vector<int> occupancy_labels(const Tensor& logits) {
  if (logits.rank() != 4 || logits.dim(0) != kNumOccClasses) {
    throw std::invalid_argument("occupancy_labels: expected 12 x H x W x Z logits");
  }
  const std::size_t cells = logits.plane_size();
  std::vector<int> labels(cells, 0);
  for (std::size_t i = 0; i < cells; ++i) {
    double best = logits[i];
    for (std::size_t k = 1; k < kNumOccClasses; ++k) {
      if (logits[k * cells + i] > best) {
        best = logits[k * cells + i];
        labels[i] = static_cast<int>(k);
      }
    }
  }
  return labels;
}

}  // namespace radocc
