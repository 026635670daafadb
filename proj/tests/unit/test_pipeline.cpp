#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "radocc/config.hpp"
#include "radocc/pipeline.hpp"
#include "radocc/scene_io.hpp"
#include "radocc/tensor_io.hpp"

using namespace radocc;
namespace fs = std::filesystem;

namespace {

SceneData desk_scene(const PipelineConfig& cfg) {
  return materialize_scene(generate_scene(cfg.seed, cfg.synth, cfg.bounds), cfg.channels,
                           cfg.occ_grid());
}

}  // namespace

TEST_CASE("config validation names the key") {
  PipelineConfig c = PipelineConfig::desk();
  CHECK_NOTHROW(c.validate());
  c.occ = {40, 60, 6};
  CHECK_THROWS_WITH(c.validate(), doctest::Contains("'occ'"));
  c = PipelineConfig::desk();
  c.channels = 15;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(PipelineConfig::paper_scale().validate());
}

TEST_CASE("config JSON round trip and unknown keys") {
  PipelineConfig c = PipelineConfig::desk();
  c.seed = 42;
  c.frames = 3;
  const std::string j = config_to_json(c);
  const PipelineConfig back = parse_config(j, PipelineConfig::desk());
  CHECK(config_to_json(back) == j);
  CHECK_THROWS_WITH(parse_config(R"({"bogus": 1})", c), doctest::Contains("bogus"));
  CHECK_THROWS_AS(parse_config("{not json", c), std::invalid_argument);
}

TEST_CASE("scene write and reload") {
  PipelineConfig cfg = PipelineConfig::desk();
  cfg.seed = 2;
  const SceneData s = desk_scene(cfg);
  const fs::path dir = "scene_roundtrip";
  fs::remove_all(dir);
  write_scene(dir, s);
  const SceneData back = load_scene(dir, cfg.occ_grid());
  REQUIRE(back.frames.size() == s.frames.size());
  CHECK(back.rig.cameras.size() == s.rig.cameras.size());
  CHECK(back.frames[0].radar.size() == s.frames[0].radar.size());
  CHECK(back.frames[0].radar[0].size() == s.frames[0].radar[0].size());
  REQUIRE(back.frames[0].gt.has_value());
  CHECK(back.frames[0].gt->occ == s.frames[0].gt->occ);
  CHECK(back.frames[0].gt->boxes.size() == s.frames[0].gt->boxes.size());

  std::ofstream(dir / "poses.csv", std::ios::app) << "garbage\n";
  CHECK_THROWS_WITH(load_scene(dir, cfg.occ_grid()), doctest::Contains("poses.csv"));
  fs::remove_all(dir / "calib.txt");
  CHECK_THROWS_WITH(load_scene(dir, cfg.occ_grid()), doctest::Contains("calib.txt"));
}

TEST_CASE("single frame window bypasses the temporal encoder") {
  PipelineConfig cfg = PipelineConfig::desk();
  cfg.frames = 1;
  const SceneData s = desk_scene(cfg);
  const Model model = Model::seeded(cfg);
  TemporalBuffer buf(0);
  for (std::size_t t = 0; t < s.frames.size(); ++t) {
    const FrameOutputs out = process_frame(cfg, model, s, t, buf);
    CHECK(out.temporal_voxel == out.voxel);
    CHECK(buf.empty());
  }
}

TEST_CASE("dumps reload and stages are validated") {
  PipelineConfig cfg = PipelineConfig::desk();
  cfg.synth.frames = 1;
  const SceneData s = desk_scene(cfg);
  RunOptions opt;
  opt.dump_stage = "fused_bev";
  opt.dump_dir = "dump_test";
  fs::remove_all(opt.dump_dir);
  run_pipeline(cfg, s, opt);
  const Tensor t = load_tensor_binary(opt.dump_dir / "fused_bev_0000.dtns");
  CHECK(t.shape() == Shape{cfg.channels, cfg.occ.h, cfg.occ.w});
  CHECK(fs::exists(opt.dump_dir / "fused_bev_0000.pgm"));
  std::ofstream os("reload.dtns", std::ios::binary);
  write_tensor_binary(os, t);
  os.close();
  CHECK(load_tensor_binary("reload.dtns") == t);

  CHECK_FALSE(is_dump_stage("nonsense"));
  CHECK(dump_stage_list().find("occ_logits") != std::string::npos);
  opt.dump_stage = "nonsense";
  CHECK_THROWS(run_pipeline(cfg, s, opt));
}

TEST_CASE("missing pose is caught before processing") {
  PipelineConfig cfg = PipelineConfig::desk();
  SceneData s = desk_scene(cfg);
  s.frames[1].pose.reset();
  CHECK_THROWS_AS(validate_scene(cfg, s), std::invalid_argument);
}
