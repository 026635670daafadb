#include "radocc/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "radocc/tensor_io.hpp"

namespace radocc {

using nlohmann::json;
namespace fs = std::filesystem;

Model Model::seeded(const PipelineConfig& c) {
  CounterRng root(c.seed, "model");
  Model m;
  CounterRng r1 = root.child("pillar");
  m.pillar = PillarEncoder::seeded(c.radar_channels, r1);
  CounterRng r2 = root.child("backbone");
  m.backbone = BevBackbone::seeded(c.radar_channels, r2);
  CounterRng r3 = root.child("radar_query");
  m.radar_query = RadarQueryBranch::seeded(c.radar_channels, c.channels, r3);
  CounterRng r4 = root.child("encoder");
  m.encoder = VoxelEncoder::seeded(c.channels, c.encoder_layers, c.heads, c.points, r4);
  CounterRng r5 = root.child("temporal");
  m.temporal = TemporalModule::seeded(c.channels, c.radar_channels, c.frames - 1, c.heads,
                                      c.points, r5);
  CounterRng r6 = root.child("fusion");
  m.fusion = FusionModule::seeded(c.channels, c.radar_channels, r6);
  CounterRng r7 = root.child("detection");
  m.detection = DetectionHead::seeded(c.channels, c.queries, c.occ.bev(), c.heads, c.points, r7);
  CounterRng r8 = root.child("occupancy");
  m.occupancy = OccupancyHead::seeded(c.channels, c.occ_hidden, r8);
  return m;
}

bool is_dump_stage(std::string_view stage) {
  return std::find(kDumpStages.begin(), kDumpStages.end(), stage) != kDumpStages.end();
}

std::string dump_stage_list() {
  std::string s;
  for (auto st : kDumpStages) {
    if (!s.empty()) s += ", ";
    s += st;
  }
  return s;
}

void validate_scene(const PipelineConfig& c, const SceneData& scene) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("scene: " + msg); };
  if (scene.frames.empty()) bad("no frames");
  if (scene.rig.cameras.empty()) bad("rig has no cameras");
  for (const auto& cam : scene.rig.cameras) cam.validate();
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const FrameData& fr = scene.frames[f];
    const std::string tag = "frame " + std::to_string(f) + ": ";
    if (!fr.pose) bad(tag + "missing ego pose");
    if (!fr.ego_velocity) bad(tag + "missing ego velocity");
    if (fr.radar.size() != scene.rig.radars.size()) {
      bad(tag + std::to_string(fr.radar.size()) + " radar sweeps for " +
          std::to_string(scene.rig.radars.size()) + " radars");
    }
    if (fr.camera_features.size() != scene.rig.cameras.size()) {
      bad(tag + std::to_string(fr.camera_features.size()) + " feature maps for " +
          std::to_string(scene.rig.cameras.size()) + " cameras");
    }
    for (std::size_t i = 0; i < fr.camera_features.size(); ++i) {
      const Tensor& t = fr.camera_features[i];
      const CameraModel& cam = scene.rig.cameras[i];
      if (t.rank() != 3 || t.dim(0) != c.channels || t.dim(1) != cam.feature_h ||
          t.dim(2) != cam.feature_w) {
        bad(tag + "camera " + std::to_string(i) + " features must be " +
            std::to_string(c.channels) + " x " + std::to_string(cam.feature_h) + " x " +
            std::to_string(cam.feature_w));
      }
    }
    if (fr.gt && fr.gt->boxes.size() > c.queries) {
      bad(tag + "more ground-truth boxes than detection queries");
    }
  }
}

AccumulatedCloud accumulate_radar(const PipelineConfig& c, const SceneData& scene,
                                  std::size_t t) {
  const FrameData& cur = scene.frames.at(t);
  const std::size_t first = t + 1 >= c.radar_sweeps ? t + 1 - c.radar_sweeps : 0;
  std::vector<RadarSweep> sweeps;
  for (std::size_t s = first; s <= t; ++s) {
    const FrameData& fr = scene.frames[s];
    for (std::size_t r = 0; r < scene.rig.radars.size(); ++r) {
      RadarSweep sw;
      sw.points = fr.radar[r];
      sw.radar_to_ego = scene.rig.radars[r].radar_to_ego;
      sw.ego_velocity = fr.ego_velocity;
      sw.sweep_to_current = cur.pose->inverse() * (*fr.pose);
      sw.timestamp = fr.timestamp;
      sweeps.push_back(std::move(sw));
    }
  }
  return compensate_and_accumulate(sweeps);
}

FrameOutputs process_frame(const PipelineConfig& c, const Model& m, const SceneData& scene,
                           std::size_t t, TemporalBuffer& buffer) {
  const FrameData& fr = scene.frames.at(t);
  const RefGrid3D vgrid = c.voxel_grid();
  FrameOutputs out;

  const AccumulatedCloud cloud = accumulate_radar(c, scene, t);
  out.radar_points = cloud.points.size();
  out.skipped_zero_range = cloud.skipped_zero_range;
  out.radar_bev = m.backbone.forward(pillarize(cloud, c.bounds, c.bev, m.pillar));
  out.camera = fr.camera_features;

  const VoxelQueries q_r = cvqg_radar_branch(out.radar_bev, vgrid, m.radar_query);
  const VoxelQueries q_i = cvqg_image_branch(out.camera, scene.rig.cameras, vgrid);
  const VoxelQueries q = cvqg_combine(q_r, q_i);
  out.queries = q.features;
  out.voxel = voxel_encoder(q, out.camera, scene.rig.cameras, m.encoder).features;

  // The temporal BEV branch runs on the radar BEV map at the BEV grid.
  DteOutput dte =
      dte_step(buffer, out.voxel, out.radar_bev, fr.pose, vgrid, c.bev_grid(), m.temporal);
  out.temporal_voxel = std::move(dte.voxel);
  out.temporal_bev = std::move(dte.bev);

  out.fused = cross_modal_fusion(out.temporal_voxel, out.temporal_bev, m.fusion);
  out.occ_logits = occupancy_head(out.fused.voxel, m.occupancy);
  out.occ_pred = occupancy_labels(out.occ_logits);
  out.detection = detection_head(out.fused.bev, m.detection);
  const RefGrid2D det_grid = make_ref_grid_2d(c.bounds, c.occ.bev());
  BoxSet all = decode_detections(out.detection, m.detection, det_grid, c.queries);
  out.boxes.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(c.top_k));

  if (fr.gt) {
    LossReport lr;
    lr.det = detection_loss(all, fr.gt->boxes, c.loss);
    lr.occ = occupancy_loss(out.occ_logits, fr.gt->occ);
    lr.aux_occ = bce_dice(out.fused.aux_occ.data(), fr.gt->occ_mask.data()).value;
    lr.aux_seg = bce_dice(out.fused.aux_seg.data(), fr.gt->bev_mask.data()).value;
    lr.aux = lr.aux_occ + lr.aux_seg;
    lr.total = total_loss(lr.det.total, lr.occ.total, lr.aux);
    out.loss = std::move(lr);
  }
  return out;
}

namespace {

std::string frame_tag(std::size_t frame) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", frame);
  return buf;
}

Tensor max_over_height(const Tensor& vol) {
  Tensor img({vol.dim(0), vol.dim(1)});
  for (std::size_t i = 0; i < vol.dim(0); ++i) {
    for (std::size_t j = 0; j < vol.dim(1); ++j) {
      double mx = vol.at(i, j, std::size_t{0});
      for (std::size_t k = 1; k < vol.dim(2); ++k) mx = std::max(mx, vol.at(i, j, k));
      img.at(i, j) = mx;
    }
  }
  return img;
}

const Tensor& stage_tensor(const FrameOutputs& o, std::string_view stage) {
  if (stage == "radar_bev") return o.radar_bev;
  if (stage == "camera") return o.camera.at(0);
  if (stage == "queries") return o.queries;
  if (stage == "voxel") return o.voxel;
  if (stage == "temporal_voxel") return o.temporal_voxel;
  if (stage == "temporal_bev") return o.temporal_bev;
  if (stage == "fused_voxel") return o.fused.voxel;
  if (stage == "fused_bev") return o.fused.bev;
  if (stage == "aux_occ") return o.fused.aux_occ;
  if (stage == "aux_seg") return o.fused.aux_seg;
  if (stage == "occ_logits") return o.occ_logits;
  throw std::invalid_argument("unknown dump stage '" + std::string(stage) +
                              "'; valid stages: " + dump_stage_list());
}

void dump_one(const Tensor& t, std::string_view stage, const fs::path& stem) {
  save_tensor_binary(stem.string() + ".dtns", t);
  Tensor img;
  if (stage == "aux_seg") {
    img = t;
  } else if (stage == "aux_occ") {
    img = max_over_height(t);
  } else {
    img = channel_norm_image(t);
  }
  write_pgm(stem.string() + ".pgm", img);
}

json shape_json(const Shape& s) { return json(s); }

json box_json(const Box3D& b) {
  const auto p = b.params();
  return {{"params", std::vector<double>(p.begin(), p.end())},
          {"label", object_class_name(b.label)},
          {"score", b.score}};
}

}  // namespace

void dump_stage(const FrameOutputs& out, std::string_view stage, std::size_t frame,
                const fs::path& dir) {
  if (!is_dump_stage(stage)) {
    throw std::invalid_argument("unknown dump stage '" + std::string(stage) +
                                "'; valid stages: " + dump_stage_list());
  }
  fs::create_directories(dir);
  const std::string base = std::string(stage) + "_" + frame_tag(frame);
  if (stage == "camera") {
    for (std::size_t i = 0; i < out.camera.size(); ++i) {
      dump_one(out.camera[i], stage, dir / (base + "_" + std::to_string(i)));
    }
    return;
  }
  dump_one(stage_tensor(out, stage), stage, dir / base);
}

RunResult run_pipeline(const PipelineConfig& config, const SceneData& scene,
                       const RunOptions& options) {
  config.validate();
  validate_scene(config, scene);
  if (options.dump_stage && !is_dump_stage(*options.dump_stage)) {
    throw std::invalid_argument("unknown dump stage '" + *options.dump_stage +
                                "'; valid stages: " + dump_stage_list());
  }
  const Model model = Model::seeded(config);
  TemporalBuffer buffer(config.frames - 1);

  std::ofstream predictions;
  if (options.predictions) {
    if (options.predictions->has_parent_path()) {
      fs::create_directories(options.predictions->parent_path());
    }
    predictions.open(*options.predictions);
    if (!predictions) {
      throw std::runtime_error("cannot write predictions " + options.predictions->string());
    }
  }

  RunResult result;
  json frames = json::array();
  std::vector<DetFrame> det_frames;
  std::vector<int> occ_pred_all, occ_gt_all;
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    FrameOutputs out = process_frame(config, model, scene, t, buffer);
    if (options.dump_stage) dump_stage(out, *options.dump_stage, t, options.dump_dir);

    json shapes = json::object();
    result.last_shapes.clear();
    for (auto st : kDumpStages) {
      const Shape& s = stage_tensor(out, st).shape();
      shapes[std::string(st)] = shape_json(s);
      result.last_shapes.push_back(s);
    }
    json fj = {{"index", t},
               {"radar_points", out.radar_points},
               {"skipped_zero_range", out.skipped_zero_range},
               {"history", std::min(t, config.frames - 1)},
               {"detections", out.boxes.size()},
               {"shapes", shapes}};
    if (out.loss) {
      const LossReport& l = *out.loss;
      fj["loss"] = {{"det_cls", l.det.cls},   {"det_reg", l.det.reg}, {"det", l.det.total},
                    {"occ_ce", l.occ.ce},     {"occ_geo", l.occ.geo}, {"occ_sem", l.occ.sem},
                    {"occ", l.occ.total},     {"aux_occ", l.aux_occ}, {"aux_seg", l.aux_seg},
                    {"aux", l.aux},           {"total", l.total}};
    }
    frames.push_back(std::move(fj));

    const FrameData& fr = scene.frames[t];
    if (fr.gt) {
      det_frames.push_back({out.boxes, fr.gt->boxes});
      occ_pred_all.insert(occ_pred_all.end(), out.occ_pred.begin(), out.occ_pred.end());
      occ_gt_all.insert(occ_gt_all.end(), fr.gt->occ.begin(), fr.gt->occ.end());
    }
    if (predictions.is_open()) {
      const std::string occ_name = "occ_pred_" + frame_tag(t) + ".bin";
      const Extent3 e = config.occ;
      Tensor occ({e.h, e.w, e.z});
      for (std::size_t i = 0; i < out.occ_pred.size(); ++i) {
        occ[i] = static_cast<double>(out.occ_pred[i]);
      }
      save_tensor_binary(options.predictions->parent_path() / occ_name, occ);
      json boxes = json::array();
      for (const auto& b : out.boxes) boxes.push_back(box_json(b));
      predictions << json{{"frame", t}, {"boxes", boxes}, {"occupancy", occ_name}}.dump() << '\n';
    }
  }

  json report;
  report["config"] = json::parse(config_to_json(config));
  report["scene"] = {{"frames", scene.frames.size()},
                     {"cameras", scene.rig.cameras.size()},
                     {"radars", scene.rig.radars.size()}};
  report["frames"] = std::move(frames);

  std::ostringstream pr;
  pr << std::setprecision(std::numeric_limits<double>::max_digits10);
  pr << "class,threshold,score,recall,precision\n";
  if (!det_frames.empty()) {
    result.detection = evaluate_detection(det_frames, config.thresholds);
    const DetEval& d = result.detection;
    json ap = json::object();
    for (std::size_t c = 0; c < kNumDetClasses; ++c) {
      json row = json::array();
      for (const auto& v : d.ap[c]) row.push_back(v ? json(*v) : json(nullptr));
      ap[std::string(object_class_name(static_cast<int>(c)))] = row;
    }
    report["detection"] = {{"thresholds", d.thresholds}, {"ap", ap},       {"mAP", d.map},
                           {"mATE", d.mate},             {"mASE", d.mase}, {"mAOE", d.maoe},
                           {"mAVE", d.mave},             {"ODS", d.ods}};
    for (std::size_t c = 0; c < kNumDetClasses; ++c) {
      for (double thr : config.thresholds) {
        for (const auto& p : pr_curve(det_frames, static_cast<int>(c), thr)) {
          pr << object_class_name(static_cast<int>(c)) << ',' << thr << ',' << p.score << ','
             << p.recall << ',' << p.precision << '\n';
        }
      }
    }
    result.occupancy = occupancy_iou(occ_pred_all, occ_gt_all);
    const OccEval& o = result.occupancy;
    json iou = json::object();
    for (std::size_t c = 1; c < kNumOccClasses; ++c) {
      iou[std::string(occ_class_name(static_cast<int>(c)))] =
          o.iou[c] ? json(*o.iou[c]) : json(nullptr);
    }
    report["occupancy"] = {{"iou", iou},
                           {"mIoU", o.miou},
                           {"SC_IoU", o.sc_iou},
                           {"evaluated_classes", o.evaluated_classes}};
  }
  result.pr_csv = pr.str();
  result.report_json = report.dump(2);
  return result;
}

}  // namespace radocc
