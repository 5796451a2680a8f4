// ddet: cluster a depth cloud into region proposals, classify them with a
// pluggable backend, and score the detections. Subcommands: detect, eval,
// synth, calibrate, bench.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddet/ddet.hpp"

namespace {

// Every pipeline config key doubles as a --key=value flag; values given on
// the command line override the config file, which overrides defaults.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"tau", "clustering linkage cutoff, meters"},
        {"min_points", "minimum cluster size, points"},
        {"min_fraction", "minimum cluster size as fraction of the cloud"},
        {"corner_frac", "top-corner region size, fraction of image"},
        {"margin_frac", "proposal bbox expansion per side"},
        {"drop_behind_camera", "skip points behind the camera (true/false)"},
        {"backend", "classifier backend: stub | external"},
        {"lambda", "minimum top-1 probability for a detection"},
        {"palette", "stub palette: label:r,g,b;..."},
        {"external_cmd", "external classifier command"},
        {"timeout_s", "external classifier timeout, seconds"},
        {"pool", "max concurrent classifier calls"},
        {"iou_thresh", "IoU threshold for matching"},
        {"class_aware", "match only same-label boxes (true/false)"},
        {"cloud", "point cloud file (.xyz/.txt/.pcd/.ply)"},
        {"image", "RGB image file (.ppm)"},
        {"calib", "calibration JSON (projection or correspondences)"},
        {"gt", "ground-truth JSON"},
        {"out", "output directory"},
        {"frame", "frame name for detections JSON"},
    };
    for (const auto& [key, help] : keys)
      cmd->add_option("--" + key, values[key], help)->group("pipeline config");
  }

  ddet::PipelineConfig build(CLI::App* cmd) const {
    ddet::PipelineConfig cfg;
    if (!config_path.empty()) ddet::load_config_file(cfg, config_path);
    for (const auto& [key, value] : values)
      if (cmd->count("--" + key) > 0) ddet::apply_config_kv(cfg, key, value);
    return cfg;
  }
};

void print_detect_summary(const ddet::DetectResult& res) {
  std::printf("frame %s: %zu clusters, %zu proposals, %zu detections (%.3f ms total)\n",
              res.frame.c_str(), res.cluster_count, res.proposal_count, res.detections.size(),
              res.timings.total_ms);
  for (const auto& d : res.detections)
    std::printf("  [%d,%d,%d,%d] %s %.4f\n", d.bbox.x_min, d.bbox.y_min, d.bbox.x_max,
                d.bbox.y_max, d.label.c_str(), d.prob);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-driven object detection pipeline"};
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand("detect", "run the detection pipeline on one frame");
  ConfigFlags detect_flags;
  detect_flags.attach(detect);

  // bench
  auto* bench = app.add_subcommand("bench", "run the pipeline repeatedly and report timings");
  ConfigFlags bench_flags;
  bench_flags.attach(bench);
  int bench_repeat = 10;
  std::string bench_out;
  bench->add_option("--repeat", bench_repeat, "number of pipeline runs")->capture_default_str();
  bench->add_option("--bench-out", bench_out, "write the timing summary JSON here");

  // eval
  auto* eval = app.add_subcommand("eval", "score detections against ground truth");
  std::string eval_dets, eval_gt, eval_out;
  double eval_iou_thresh = 0.5;
  std::string eval_class_aware = "true";
  eval->add_option("--detections", eval_dets, "detections JSON")->required();
  eval->add_option("--gt", eval_gt, "ground-truth JSON")->required();
  eval->add_option("--iou_thresh", eval_iou_thresh, "IoU threshold")->capture_default_str();
  eval->add_option("--class_aware", eval_class_aware, "match only same-label boxes")
      ->capture_default_str();
  eval->add_option("--out", eval_out, "write the report JSON here");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic RGB-D scenes");
  std::uint64_t synth_seed = 1;
  int synth_scenes = 1, synth_objects = 4, synth_img_w = 640, synth_img_h = 480;
  double synth_noise = 0.0;
  std::string synth_out, synth_palette;
  bool synth_floor = false, synth_force = false;
  synth->add_option("--seed", synth_seed, "seed of the first scene")->capture_default_str();
  synth->add_option("--scenes", synth_scenes, "number of scenes (seeds seed..seed+N-1)")
      ->capture_default_str();
  synth->add_option("--objects", synth_objects, "objects per scene")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Gaussian point noise sigma, meters")
      ->capture_default_str();
  synth->add_option("--img-w", synth_img_w, "image width")->capture_default_str();
  synth->add_option("--img-h", synth_img_h, "image height")->capture_default_str();
  synth->add_option("--palette", synth_palette, "palette: label:r,g,b;...");
  synth->add_flag("--floor", synth_floor, "add a floor plane to the cloud");
  synth->add_flag("--force", synth_force, "overwrite existing scene directories");
  synth->add_option("--out", synth_out, "output directory")->required();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "solve the projection matrix by DLT");
  std::string calib_in, calib_out;
  calibrate->add_option("--input", calib_in, "JSON with 3D-2D correspondences")->required();
  calibrate->add_option("--output", calib_out, "write {projection, rms_px} here");

  try {
    app.parse(argc, argv);

    if (*detect) {
      const ddet::PipelineConfig cfg = detect_flags.build(detect);
      const ddet::DetectResult res = ddet::run_detect(cfg);
      print_detect_summary(res);
    } else if (*bench) {
      const ddet::PipelineConfig cfg = bench_flags.build(bench);
      const ddet::BenchReport report = ddet::run_bench(cfg, bench_repeat);
      std::fputs(ddet::bench_table(report).c_str(), stdout);
      if (!bench_out.empty())
        ddet::write_file(bench_out, ddet::bench_to_json(report).dump(2) + "\n");
    } else if (*eval) {
      ddet::EvalParams params;
      params.iou_thresh = eval_iou_thresh;
      params.class_aware = ddet::detail::parse_bool(eval_class_aware, "class_aware");
      const ddet::EvalReport report = ddet::run_eval(eval_dets, eval_gt, params);
      const ddet::Json j = ddet::report_to_json(report);
      std::printf("%s\n", j.dump(2).c_str());
      if (!eval_out.empty()) ddet::write_file(eval_out, j.dump(2) + "\n");
    } else if (*synth) {
      if (synth_scenes < 1) throw ddet::ConfigError("--scenes must be >= 1");
      std::vector<ddet::FrameGroundTruth> all_gt;
      for (int k = 0; k < synth_scenes; ++k) {
        ddet::SceneSpec spec;
        spec.seed = synth_seed + static_cast<std::uint64_t>(k);
        spec.n_objects = synth_objects;
        spec.img_w = synth_img_w;
        spec.img_h = synth_img_h;
        spec.noise_sigma = synth_noise;
        spec.floor = synth_floor;
        if (!synth_palette.empty()) spec.palette = ddet::parse_palette_string(synth_palette);
        const ddet::Scene scene = ddet::generate_scene(spec);
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%03d", k + 1);
        const std::string dir = synth_out + "/" + name;
        ddet::write_scene(scene, dir, synth_force);
        all_gt.push_back(ddet::FrameGroundTruth{name, scene.gt});
        std::printf("%s: %zu points, %zu objects (seed %llu)\n", dir.c_str(),
                    scene.cloud.size(), scene.gt.size(),
                    static_cast<unsigned long long>(spec.seed));
      }
      ddet::write_file(synth_out + "/gt.json",
                       ddet::ground_truth_to_json(all_gt).dump(2) + "\n");
    } else if (*calibrate) {
      const auto corr = ddet::correspondences_from_json(
          ddet::detail::parse_json(ddet::read_file(calib_in), calib_in));
      const ddet::ProjectionMatrix p = ddet::solve_projection_dlt(corr);
      const double rms = ddet::reprojection_rms(p, corr);
      ddet::Json j = ddet::projection_to_json(p);
      j["rms_px"] = rms;
      std::printf("%s\n", j.dump(2).c_str());
      std::printf("reprojection rms: %.6g px over %zu correspondences\n", rms, corr.size());
      if (!calib_out.empty()) ddet::write_file(calib_out, j.dump(2) + "\n");
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ddet::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.error_class());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return static_cast<int>(ddet::ErrorClass::internal);
  }
  return 0;
}
