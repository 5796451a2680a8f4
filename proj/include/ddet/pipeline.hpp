#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ddet/classifier.hpp"
#include "ddet/clustering.hpp"
#include "ddet/errors.hpp"
#include "ddet/evaluation.hpp"
#include "ddet/io.hpp"
#include "ddet/json_io.hpp"
#include "ddet/proposal.hpp"

namespace ddet {

// Flat configuration for the detect/bench pipeline. Every key can come from
// a config file (key = value) or a --key=value flag; CLI beats file beats
// default.
struct PipelineConfig {
  // clustering
  double tau = 0.06;
  int min_points = 50;
  // proposal
  double min_fraction = 0.02;
  double corner_frac = 0.15;
  double margin_frac = 0.02;
  bool drop_behind_camera = true;
  // classifier
  std::string backend = "stub";  // "stub" | "external"
  double lambda = 0.2;
  Palette palette = default_palette();
  std::string external_cmd;
  double timeout_s = 10.0;
  int pool = 4;
  // evaluation
  double iou_thresh = 0.5;
  bool class_aware = true;
  // paths
  std::string cloud;
  std::string image;
  std::string calib;
  std::string gt;
  std::string out;
  std::string frame;  // frame name; derived from the cloud path when empty

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
    if (min_points < 1) throw ConfigError("min_points must be >= 1");
    ProposalParams{min_fraction, corner_frac, margin_frac, drop_behind_camera}.validate();
    if (backend != "stub" && backend != "external")
      throw ConfigError("backend must be \"stub\" or \"external\", got \"" + backend + "\"");
    if (backend == "external" && external_cmd.empty())
      throw ConfigError("backend \"external\" requires external_cmd");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0,1]");
    if (palette.empty()) throw ConfigError("palette must not be empty");
    if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be positive");
    if (pool < 1) throw ConfigError("pool must be >= 1");
    if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) throw ConfigError("iou_thresh must be in (0,1]");
  }

  ProposalParams proposal_params() const {
    return ProposalParams{min_fraction, corner_frac, margin_frac, drop_behind_camera};
  }
  ClusterParams cluster_params() const { return ClusterParams{tau, min_points}; }
  EvalParams eval_params() const { return EvalParams{iou_thresh, class_aware}; }
};

// -- config parsing ----------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'");
}

inline double parse_double_cfg(const std::string& v, const std::string& key) {
  auto d = to_double(v);
  if (!d) throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  return *d;
}

inline int parse_int_cfg(const std::string& v, const std::string& key) {
  auto d = to_int(v);
  if (!d) throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(*d);
}

}  // namespace detail

// Palette syntax: "label:r,g,b;label:r,g,b;..."
inline Palette parse_palette_string(const std::string& text) {
  Palette palette;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string::npos) end = text.size();
    const std::string entry = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (entry.empty()) continue;
    const std::size_t colon = entry.find(':');
    if (colon == std::string::npos)
      throw ConfigError("palette entry '" + entry + "' must look like label:r,g,b");
    const std::string label = detail::trim(entry.substr(0, colon));
    if (label.empty()) throw ConfigError("palette entry with empty label");
    int ch[3];
    std::size_t p = colon + 1;
    for (int i = 0; i < 3; ++i) {
      std::size_t comma = i < 2 ? entry.find(',', p) : entry.size();
      if (comma == std::string::npos)
        throw ConfigError("palette entry '" + entry + "' must have three color components");
      auto v = detail::to_int(detail::trim(entry.substr(p, comma - p)));
      if (!v || *v < 0 || *v > 255)
        throw ConfigError("palette color component out of range in '" + entry + "'");
      ch[i] = static_cast<int>(*v);
      p = comma + 1;
    }
    palette[label] = Rgb{static_cast<std::uint8_t>(ch[0]), static_cast<std::uint8_t>(ch[1]),
                         static_cast<std::uint8_t>(ch[2])};
  }
  if (palette.empty()) throw ConfigError("palette string is empty");
  return palette;
}

inline std::string palette_to_string(const Palette& palette) {
  std::string out;
  for (const auto& [label, c] : palette) {
    if (!out.empty()) out += ';';
    out += label + ":" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
           std::to_string(c.b);
  }
  return out;
}

// Applies one key=value pair; unknown keys are rejected.
inline void apply_config_kv(PipelineConfig& cfg, const std::string& key,
                            const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double_cfg;
  using detail::parse_int_cfg;
  if (key == "tau") cfg.tau = parse_double_cfg(value, key);
  else if (key == "min_points") cfg.min_points = parse_int_cfg(value, key);
  else if (key == "min_fraction") cfg.min_fraction = parse_double_cfg(value, key);
  else if (key == "corner_frac") cfg.corner_frac = parse_double_cfg(value, key);
  else if (key == "margin_frac") cfg.margin_frac = parse_double_cfg(value, key);
  else if (key == "drop_behind_camera") cfg.drop_behind_camera = parse_bool(value, key);
  else if (key == "backend") cfg.backend = value;
  else if (key == "lambda") cfg.lambda = parse_double_cfg(value, key);
  else if (key == "palette") cfg.palette = parse_palette_string(value);
  else if (key == "external_cmd") cfg.external_cmd = value;
  else if (key == "timeout_s") cfg.timeout_s = parse_double_cfg(value, key);
  else if (key == "pool") cfg.pool = parse_int_cfg(value, key);
  else if (key == "iou_thresh") cfg.iou_thresh = parse_double_cfg(value, key);
  else if (key == "class_aware") cfg.class_aware = parse_bool(value, key);
  else if (key == "cloud") cfg.cloud = value;
  else if (key == "image") cfg.image = value;
  else if (key == "calib") cfg.calib = value;
  else if (key == "gt") cfg.gt = value;
  else if (key == "out") cfg.out = value;
  else if (key == "frame") cfg.frame = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

// TOML-compatible subset: one `key = value` per line, strings in double
// quotes, # comments.
inline void load_config_text(PipelineConfig& cfg, std::string_view text,
                             const std::string& origin = "config") {
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;

    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + " line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '"') {
      const std::size_t close = value.find('"', 1);
      if (close == std::string::npos)
        throw ConfigError(origin + " line " + std::to_string(line_no) + ": unterminated string");
      const std::string rest = detail::trim(value.substr(close + 1));
      if (!rest.empty() && rest[0] != '#')
        throw ConfigError(origin + " line " + std::to_string(line_no) + ": trailing junk");
      value = value.substr(1, close - 1);
    } else {
      const std::size_t hash = value.find('#');
      if (hash != std::string::npos) value = detail::trim(value.substr(0, hash));
    }
    if (key.empty()) throw ConfigError(origin + " line " + std::to_string(line_no) + ": empty key");
    apply_config_kv(cfg, key, value);
  }
}

inline void load_config_file(PipelineConfig& cfg, const std::string& path) {
  load_config_text(cfg, read_file(path), path);
}

// -- pipeline ----------------------------------------------------------------

struct StageTimings {
  double parse_ms = 0;
  double cluster_ms = 0;
  double denoise_ms = 0;
  double project_ms = 0;
  double crop_ms = 0;
  double classify_ms = 0;
  double filter_ms = 0;
  double total_ms = 0;
};

namespace detail {

inline bool log_enabled() {
  static const bool enabled = [] {
    const char* v = std::getenv("DDET_LOG");
    return v != nullptr && std::string_view(v) == "debug";
  }();
  return enabled;
}

inline void log_debug(const std::string& msg) {
  if (log_enabled()) std::fprintf(stderr, "[ddet] %s\n", msg.c_str());
}

class StageClock {
 public:
  StageClock() : start_(std::chrono::steady_clock::now()), last_(start_) {}
  // milliseconds since the previous lap
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }
  double total() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point last_;
};

inline double round3(double ms) { return std::round(ms * 1000.0) / 1000.0; }

}  // namespace detail

inline PointCloud load_cloud_file(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  const std::string bytes = read_file(path);
  if (ext == ".xyz" || ext == ".txt") return parse_xyz(bytes);
  if (ext == ".pcd") return parse_pcd(bytes);
  if (ext == ".ply") return parse_ply(bytes);
  throw UnsupportedFormatError("unknown point-cloud extension '" + ext + "' (expected .xyz/.txt/.pcd/.ply)");
}

inline std::unique_ptr<ClassifierBackend> make_backend(const PipelineConfig& cfg) {
  if (cfg.backend == "stub") return std::make_unique<StubClassifier>(cfg.palette);
  if (cfg.backend == "external")
    return std::make_unique<ExternalClassifier>(cfg.external_cmd, cfg.timeout_s);
  throw ConfigError("backend must be \"stub\" or \"external\"");
}

// Classifies crops with up to `pool` worker threads. Results are slotted by
// index, so output order never depends on completion order.
inline std::vector<std::vector<ClassScore>> classify_all(const ClassifierBackend& backend,
                                                         const std::vector<Image>& crops,
                                                         int pool) {
  std::vector<std::vector<ClassScore>> results(crops.size());
  if (crops.empty()) return results;
  const int workers = std::min<int>(pool, static_cast<int>(crops.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < crops.size(); ++i) results[i] = backend.classify(crops[i]);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(crops.size());
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= crops.size()) return;
        try {
          results[i] = backend.classify(crops[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);  // first by proposal order
  return results;
}

struct DetectResult {
  std::string frame;
  std::vector<Detection> detections;
  Image annotated;
  StageTimings timings;
  std::size_t cluster_count = 0;   // clusters before denoising
  std::size_t proposal_count = 0;  // sub-images actually classified
};

namespace detail {

inline std::string derive_frame_name(const std::string& cloud_path) {
  const std::filesystem::path p(cloud_path);
  const std::string parent = p.parent_path().filename().string();
  if (!parent.empty() && parent != "." && parent != "..") return parent;
  return p.stem().string();
}

}  // namespace detail

inline Json timings_to_json(const StageTimings& t) {
  using detail::round3;
  return Json{{"parse_ms", round3(t.parse_ms)},     {"cluster_ms", round3(t.cluster_ms)},
              {"denoise_ms", round3(t.denoise_ms)}, {"project_ms", round3(t.project_ms)},
              {"crop_ms", round3(t.crop_ms)},       {"classify_ms", round3(t.classify_ms)},
              {"filter_ms", round3(t.filter_ms)},   {"total_ms", round3(t.total_ms)}};
}

// parse -> cluster -> denoise_small -> project -> denoise_top_corners ->
// crop -> classify -> filter_by_lambda, with per-stage wall-clock timings.
// Writes detections.json, annotated.ppm and timings.json under cfg.out when
// set.
inline DetectResult run_detect(const PipelineConfig& cfg,
                               const ClassifierBackend* backend_override = nullptr) {
  cfg.validate();
  if (cfg.cloud.empty() || cfg.image.empty() || cfg.calib.empty())
    throw ConfigError("detect needs cloud, image and calib paths");

  std::unique_ptr<ClassifierBackend> owned;
  const ClassifierBackend* backend = backend_override;
  if (!backend) {
    owned = make_backend(cfg);
    backend = owned.get();
  }

  DetectResult res;
  detail::StageClock clock;

  const PointCloud cloud = load_cloud_file(cfg.cloud);
  const Image image = parse_ppm(read_file(cfg.image));
  const ProjectionMatrix projection =
      load_projection(detail::parse_json(read_file(cfg.calib), cfg.calib));
  res.timings.parse_ms = clock.lap();
  detail::log_debug("parsed cloud of " + std::to_string(cloud.size()) + " points");

  const std::vector<Cluster> clusters = cluster_grid(cloud, cfg.cluster_params());
  res.cluster_count = clusters.size();
  res.timings.cluster_ms = clock.lap();
  detail::log_debug("found " + std::to_string(clusters.size()) + " clusters");

  std::vector<std::pair<int, const Cluster*>> kept;
  for (std::size_t i = 0; i < clusters.size(); ++i)
    if (small_cluster_kept(clusters[i].indices.size(), cloud.size(), cfg.min_fraction))
      kept.emplace_back(static_cast<int>(i), &clusters[i]);
  res.timings.denoise_ms = clock.lap();

  const ProposalParams pp = cfg.proposal_params();
  std::vector<Proposal> proposals;
  for (const auto& [id, cluster] : kept) {
    auto prop =
        project_cluster_bbox(projection, *cluster, cloud, image.width(), image.height(), pp, id);
    if (prop) proposals.push_back(*prop);
  }
  res.timings.project_ms = clock.lap();

  proposals = denoise_top_corners(proposals, image.width(), image.height(), cfg.corner_frac);
  res.timings.denoise_ms += clock.lap();
  res.proposal_count = proposals.size();

  std::vector<Image> crops;
  crops.reserve(proposals.size());
  for (const Proposal& prop : proposals) crops.push_back(crop_subimage(image, prop.bbox));
  res.timings.crop_ms = clock.lap();

  const std::vector<std::vector<ClassScore>> scores = classify_all(*backend, crops, cfg.pool);
  res.timings.classify_ms = clock.lap();

  std::vector<std::pair<Proposal, std::vector<ClassScore>>> scored;
  scored.reserve(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) scored.emplace_back(proposals[i], scores[i]);
  res.detections = filter_by_lambda(scored, cfg.lambda);
  res.timings.filter_ms = clock.lap();
  detail::log_debug(std::to_string(res.detections.size()) + " detections after lambda filter");

  res.annotated = image;
  for (const Detection& d : res.detections) {
    const auto it = cfg.palette.find(d.label);
    const Rgb color = it != cfg.palette.end() ? it->second : Rgb{255, 255, 255};
    res.annotated = draw_bbox(res.annotated, d.bbox, color);
    draw_label(res.annotated, d.label, d.bbox.x_min + 2, d.bbox.y_min + 2, color);
  }
  res.frame = !cfg.frame.empty() ? cfg.frame : detail::derive_frame_name(cfg.cloud);
  res.timings.total_ms = clock.total();

  if (!cfg.out.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out + ": " + ec.message());
    const fs::path base(cfg.out);
    std::vector<FrameDetections> frames{{res.frame, res.detections}};
    write_file((base / "detections.json").string(), detections_to_json(frames).dump(2) + "\n");
    write_file((base / "annotated.ppm").string(), write_ppm(res.annotated));
    Json tj = timings_to_json(res.timings);
    tj["cluster_count"] = res.cluster_count;
    tj["proposal_count"] = res.proposal_count;
    tj["detection_count"] = res.detections.size();
    write_file((base / "timings.json").string(), tj.dump(2) + "\n");
  }
  return res;
}

// -- eval --------------------------------------------------------------------

inline EvalReport run_eval(const std::string& detections_path, const std::string& gt_path,
                           const EvalParams& params = {}) {
  auto det_frames =
      detections_from_json(detail::parse_json(read_file(detections_path), detections_path));
  auto gt_frames = ground_truth_from_json(detail::parse_json(read_file(gt_path), gt_path));

  auto by_frame = [](const auto& a, const auto& b) { return a.frame < b.frame; };
  std::sort(det_frames.begin(), det_frames.end(), by_frame);
  std::sort(gt_frames.begin(), gt_frames.end(), by_frame);
  for (std::size_t i = 1; i < det_frames.size(); ++i)
    if (det_frames[i].frame == det_frames[i - 1].frame)
      throw InputError("duplicate frame '" + det_frames[i].frame + "' in detections");
  for (std::size_t i = 1; i < gt_frames.size(); ++i)
    if (gt_frames[i].frame == gt_frames[i - 1].frame)
      throw InputError("duplicate frame '" + gt_frames[i].frame + "' in ground truth");

  std::string missing_det, missing_gt;
  {
    std::size_t i = 0, j = 0;
    while (i < det_frames.size() || j < gt_frames.size()) {
      if (j >= gt_frames.size() ||
          (i < det_frames.size() && det_frames[i].frame < gt_frames[j].frame)) {
        missing_gt += (missing_gt.empty() ? "" : ", ") + det_frames[i].frame;
        ++i;
      } else if (i >= det_frames.size() || gt_frames[j].frame < det_frames[i].frame) {
        missing_det += (missing_det.empty() ? "" : ", ") + gt_frames[j].frame;
        ++j;
      } else {
        ++i;
        ++j;
      }
    }
  }
  if (!missing_det.empty() || !missing_gt.empty()) {
    std::string msg = "frame sets differ:";
    if (!missing_det.empty()) msg += " missing from detections: " + missing_det + ";";
    if (!missing_gt.empty()) msg += " missing from ground truth: " + missing_gt + ";";
    throw InputError(msg);
  }

  std::vector<std::vector<Detection>> dets;
  std::vector<std::vector<GroundTruthBox>> gts;
  for (auto& f : det_frames) dets.push_back(std::move(f.boxes));
  for (auto& f : gt_frames) gts.push_back(std::move(f.boxes));
  return evaluate(dets, gts, params);
}

// -- bench -------------------------------------------------------------------

struct BenchStats {
  double min_ms = 0;
  double median_ms = 0;
  double mean_ms = 0;
};

struct BenchReport {
  int repeats = 0;
  std::size_t cluster_count = 0;
  std::size_t detection_count = 0;
  // stage name -> stats, in pipeline order with "total" last
  std::vector<std::pair<std::string, BenchStats>> stages;
};

namespace detail {

inline BenchStats bench_stats(std::vector<double> samples) {
  BenchStats s;
  std::sort(samples.begin(), samples.end());
  s.min_ms = samples.front();
  const std::size_t n = samples.size();
  s.median_ms = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  double sum = 0;
  for (double v : samples) sum += v;
  s.mean_ms = sum / static_cast<double>(n);
  return s;
}

}  // namespace detail

inline BenchReport run_bench(const PipelineConfig& cfg, int repeat,
                             const ClassifierBackend* backend_override = nullptr) {
  if (repeat < 1) throw ConfigError("bench repeat must be >= 1");
  PipelineConfig run_cfg = cfg;
  run_cfg.out.clear();  // bench never writes detect outputs

  std::vector<StageTimings> runs;
  BenchReport report;
  report.repeats = repeat;
  for (int i = 0; i < repeat; ++i) {
    DetectResult r = run_detect(run_cfg, backend_override);
    runs.push_back(r.timings);
    report.cluster_count = r.cluster_count;
    report.detection_count = r.detections.size();
  }

  const std::vector<std::pair<std::string, double StageTimings::*>> fields = {
      {"parse", &StageTimings::parse_ms},       {"cluster", &StageTimings::cluster_ms},
      {"denoise", &StageTimings::denoise_ms},   {"project", &StageTimings::project_ms},
      {"crop", &StageTimings::crop_ms},         {"classify", &StageTimings::classify_ms},
      {"filter", &StageTimings::filter_ms},     {"total", &StageTimings::total_ms}};
  for (const auto& [name, member] : fields) {
    std::vector<double> samples;
    samples.reserve(runs.size());
    for (const auto& t : runs) samples.push_back(t.*member);
    report.stages.emplace_back(name, detail::bench_stats(samples));
  }
  return report;
}

inline Json bench_to_json(const BenchReport& r) {
  using detail::round3;
  Json stages = Json::object();
  for (const auto& [name, s] : r.stages)
    stages[name] = Json{{"min_ms", round3(s.min_ms)},
                        {"median_ms", round3(s.median_ms)},
                        {"mean_ms", round3(s.mean_ms)}};
  return Json{{"repeats", r.repeats},
              {"cluster_count", r.cluster_count},
              {"detection_count", r.detection_count},
              {"stages", stages}};
}

inline std::string bench_table(const BenchReport& r) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-10s %12s %12s %12s\n", "stage", "min ms", "median ms",
                "mean ms");
  out += buf;
  for (const auto& [name, s] : r.stages) {
    std::snprintf(buf, sizeof(buf), "%-10s %12.3f %12.3f %12.3f\n", name.c_str(), s.min_ms,
                  s.median_ms, s.mean_ms);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "runs: %d, clusters: %zu, detections: %zu\n", r.repeats,
                r.cluster_count, r.detection_count);
  out += buf;
  return out;
}

}  // namespace ddet
