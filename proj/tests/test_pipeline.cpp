#include <doctest.h>

#include <atomic>
#include <filesystem>

#include "ddet/pipeline.hpp"
#include "ddet/synth.hpp"
#include "test_helpers.hpp"

using namespace ddet;

namespace {

// Scene on disk plus a config pointing at it.
struct SceneFixture {
  std::string dir;
  PipelineConfig cfg;
  Scene scene;

  explicit SceneFixture(std::uint64_t seed, int n_objects, double noise = 0.0) {
    dir = test_helpers::temp_dir("pipe");
    SceneSpec spec;
    spec.seed = seed;
    spec.n_objects = n_objects;
    spec.noise_sigma = noise;
    scene = generate_scene(spec);
    write_scene(scene, dir);
    cfg.cloud = dir + "/cloud.pcd";
    cfg.image = dir + "/image.ppm";
    cfg.calib = dir + "/calib.json";
  }
  ~SceneFixture() { std::filesystem::remove_all(dir); }
};

class CountingBackend : public ClassifierBackend {
 public:
  explicit CountingBackend(Palette palette) : inner_(std::move(palette)) {}
  std::vector<ClassScore> classify(const Image& img) const override {
    ++calls;
    return inner_.classify(img);
  }
  mutable std::atomic<int> calls{0};

 private:
  StubClassifier inner_;
};

}  // namespace

TEST_CASE("run_detect finds every synthetic object with the right label") {
  SceneFixture fx(21, 5);
  const DetectResult res = run_detect(fx.cfg);
  CHECK(res.cluster_count == 5);
  REQUIRE(res.detections.size() == 5);
  const EvalReport report = evaluate({res.detections}, {fx.scene.gt});
  CHECK(report.map_score == 1.0);
  CHECK(report.counts.fn == 0);
  CHECK(report.mean_iou > 0.8);
  for (const auto& d : res.detections) CHECK(d.prob > 0.9);
}

TEST_CASE("run_detect writes detections, annotated image and timings") {
  SceneFixture fx(8, 3);
  fx.cfg.out = fx.dir + "/out";
  const DetectResult res = run_detect(fx.cfg);
  CHECK(std::filesystem::exists(fx.cfg.out + "/detections.json"));
  CHECK(std::filesystem::exists(fx.cfg.out + "/annotated.ppm"));
  CHECK(std::filesystem::exists(fx.cfg.out + "/timings.json"));

  const auto frames = detections_from_json(Json::parse(read_file(fx.cfg.out + "/detections.json")));
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].frame == res.frame);
  CHECK(frames[0].boxes.size() == res.detections.size());

  const Image annotated = parse_ppm(read_file(fx.cfg.out + "/annotated.ppm"));
  CHECK(!(annotated == fx.scene.image));  // boxes were drawn

  const Json tj = Json::parse(read_file(fx.cfg.out + "/timings.json"));
  for (const char* key : {"parse_ms", "cluster_ms", "denoise_ms", "project_ms", "crop_ms",
                          "classify_ms", "filter_ms", "total_ms"}) {
    REQUIRE(tj.contains(key));
    CHECK(tj[key].get<double>() >= 0.0);
  }
  // total covers the sum of the tracked stages
  const StageTimings& t = res.timings;
  const double stage_sum = t.parse_ms + t.cluster_ms + t.denoise_ms + t.project_ms + t.crop_ms +
                           t.classify_ms + t.filter_ms;
  CHECK(t.total_ms >= stage_sum - 1e-6);
}

TEST_CASE("two identical runs produce byte-identical outputs") {
  SceneFixture fx(30, 4);
  PipelineConfig a = fx.cfg, b = fx.cfg;
  a.out = fx.dir + "/out_a";
  b.out = fx.dir + "/out_b";
  run_detect(a);
  run_detect(b);
  CHECK(read_file(a.out + "/detections.json") == read_file(b.out + "/detections.json"));
  CHECK(read_file(a.out + "/annotated.ppm") == read_file(b.out + "/annotated.ppm"));
}

TEST_CASE("classifier sees exactly the surviving proposals") {
  SceneFixture fx(13, 4);
  CountingBackend backend(fx.cfg.palette);
  const DetectResult res = run_detect(fx.cfg, &backend);
  CHECK(backend.calls.load() == static_cast<int>(res.proposal_count));
  CHECK(res.proposal_count == res.detections.size());  // noiseless scene: nothing filtered
}

TEST_CASE("pipeline error classes map to their exit codes") {
  SceneFixture fx(4, 3);
  SUBCASE("lambda out of range is a config error (exit 1)") {
    PipelineConfig cfg = fx.cfg;
    cfg.lambda = 1.1;
    try {
      run_detect(cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(static_cast<int>(e.error_class()) == 1);
    }
  }
  SUBCASE("missing cloud file is a parse error (exit 2)") {
    PipelineConfig cfg = fx.cfg;
    cfg.cloud = fx.dir + "/nope.pcd";
    try {
      run_detect(cfg);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(static_cast<int>(e.error_class()) == 2);
    }
  }
  SUBCASE("degenerate calibration is a calib error (exit 3)") {
    PipelineConfig cfg = fx.cfg;
    const std::string bad = fx.dir + "/bad_calib.json";
    Json j = Json{{"correspondences", Json::array()}};
    for (int i = 0; i < 8; ++i)
      j["correspondences"].push_back(
          Json{{"world", {0.1 * i, 0.2 * i, 1.0}}, {"pixel", {1.0 * i, 2.0 * i}}});
    write_file(bad, j.dump());
    cfg.calib = bad;
    try {
      run_detect(cfg);
      FAIL("expected DegenerateError");
    } catch (const DegenerateError& e) {
      CHECK(static_cast<int>(e.error_class()) == 3);
    }
  }
  SUBCASE("failing external backend is a backend error (exit 4)") {
    PipelineConfig cfg = fx.cfg;
    cfg.backend = "external";
    cfg.external_cmd = "exit 7";
    try {
      run_detect(cfg);
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(static_cast<int>(e.error_class()) == 4);
    }
  }
}

TEST_CASE("external backend drives the pipeline end to end") {
  SceneFixture fx(19, 2);
  PipelineConfig cfg = fx.cfg;
  cfg.backend = "external";
  cfg.external_cmd = "cat > /dev/null && printf '[{\"label\":\"widget\",\"prob\":0.75}]'";
  cfg.pool = 2;
  const DetectResult res = run_detect(cfg);
  REQUIRE(res.detections.size() == 2);
  for (const auto& d : res.detections) {
    CHECK(d.label == "widget");
    CHECK(d.prob == 0.75);
  }
}

TEST_CASE("config file parsing") {
  SUBCASE("values, strings, comments") {
    PipelineConfig cfg;
    load_config_text(cfg,
                     "# pipeline settings\n"
                     "tau = 0.1\n"
                     "min_points = 20   # inline comment\n"
                     "backend = \"stub\"\n"
                     "class_aware = false\n"
                     "palette = \"thing:10,20,30;other:200,10,10\"\n");
    CHECK(cfg.tau == 0.1);
    CHECK(cfg.min_points == 20);
    CHECK(cfg.class_aware == false);
    REQUIRE(cfg.palette.size() == 2);
    CHECK(cfg.palette.at("thing") == Rgb{10, 20, 30});
  }
  SUBCASE("unknown keys are rejected") {
    PipelineConfig cfg;
    CHECK_THROWS_AS(load_config_text(cfg, "taus = 0.1\n"), ConfigError);
  }
  SUBCASE("bad values are rejected") {
    PipelineConfig cfg;
    CHECK_THROWS_AS(load_config_text(cfg, "tau = banana\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text(cfg, "class_aware = maybe\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text(cfg, "no equals sign here\n"), ConfigError);
  }
  SUBCASE("later assignments override earlier ones (CLI-over-file order)") {
    PipelineConfig cfg;  // defaults
    load_config_text(cfg, "tau = 0.1\nlambda = 0.4\n");
    apply_config_kv(cfg, "tau", "0.25");  // the CLI pass
    CHECK(cfg.tau == 0.25);
    CHECK(cfg.lambda == 0.4);
  }
  SUBCASE("palette string round-trip") {
    const Palette p = default_palette();
    CHECK(parse_palette_string(palette_to_string(p)) == p);
  }
}

TEST_CASE("run_eval") {
  SceneFixture fx(25, 4);
  PipelineConfig cfg = fx.cfg;
  cfg.out = fx.dir + "/out";
  run_detect(cfg);

  SUBCASE("perfect pipeline output scores mAP 1 against the scene gt") {
    const EvalReport r = run_eval(cfg.out + "/detections.json", fx.dir + "/gt.json");
    CHECK(r.map_score == 1.0);
    CHECK(r.counts.frames == 1);
  }
  SUBCASE("mismatched frame sets list the missing frames") {
    std::vector<FrameGroundTruth> other{{"other_frame", fx.scene.gt}};
    const std::string other_path = fx.dir + "/other_gt.json";
    write_file(other_path, ground_truth_to_json(other).dump());
    try {
      run_eval(cfg.out + "/detections.json", other_path);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("other_frame") != std::string::npos);
    }
  }
  SUBCASE("empty detections against nonempty gt score zero") {
    std::vector<FrameDetections> empty{{run_detect(cfg).frame, {}}};
    const std::string path = fx.dir + "/empty_dets.json";
    write_file(path, detections_to_json(empty).dump());
    const EvalReport r = run_eval(path, fx.dir + "/gt.json");
    CHECK(r.map_score == 0.0);
    CHECK(r.mean_iou == 0.0);
  }
}

TEST_CASE("run_bench") {
  SceneFixture fx(33, 3);
  SUBCASE("single repeat equals one timed detect run") {
    const BenchReport r = run_bench(fx.cfg, 1);
    CHECK(r.repeats == 1);
    CHECK(r.cluster_count == 3);
    REQUIRE(!r.stages.empty());
    CHECK(r.stages.back().first == "total");
    for (const auto& [name, s] : r.stages) {
      CHECK(s.min_ms == s.median_ms);  // one sample
      CHECK(s.median_ms == s.mean_ms);
    }
  }
  SUBCASE("stats are ordered min <= median and well formed") {
    const BenchReport r = run_bench(fx.cfg, 5);
    for (const auto& [name, s] : r.stages) {
      CHECK(s.min_ms <= s.median_ms + 1e-12);
      CHECK(s.min_ms >= 0.0);
      CHECK(s.mean_ms >= s.min_ms - 1e-12);
    }
    const Json j = bench_to_json(r);
    CHECK(j["repeats"] == 5);
    CHECK(!bench_table(r).empty());
  }
  SUBCASE("repeat below one is a config error") {
    CHECK_THROWS_AS(run_bench(fx.cfg, 0), ConfigError);
  }
}

TEST_CASE("load_cloud_file dispatches on extension") {
  const std::string dir = test_helpers::temp_dir("ext");
  write_file(dir + "/a.xyz", "0 0 1\n");
  write_file(dir + "/a.unknown", "0 0 1\n");
  CHECK(load_cloud_file(dir + "/a.xyz").size() == 1);
  CHECK_THROWS_AS(load_cloud_file(dir + "/a.unknown"), UnsupportedFormatError);
  std::filesystem::remove_all(dir);
}
