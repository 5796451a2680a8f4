#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ddet/calibration.hpp"
#include "ddet/errors.hpp"
#include "ddet/evaluation.hpp"

namespace ddet {

using Json = nlohmann::json;

struct FrameDetections {
  std::string frame;
  std::vector<Detection> boxes;
};

struct FrameGroundTruth {
  std::string frame;
  std::vector<GroundTruthBox> boxes;
};

namespace detail {

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw FormatError("malformed JSON in " + what + ": " + e.what());
  }
}

inline double require_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw FormatError(what + " must be a number");
  return j.get<double>();
}

inline BBox2D bbox_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4)
    throw FormatError("bbox must be [x_min, y_min, x_max, y_max]");
  int v[4];
  for (int i = 0; i < 4; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number_integer())
      throw FormatError("bbox coordinates must be integers");
    v[i] = j[static_cast<std::size_t>(i)].get<int>();
  }
  return BBox2D(v[0], v[1], v[2], v[3]);
}

inline Json bbox_to_json(const BBox2D& b) {
  return Json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

}  // namespace detail

// -- calibration file: {"correspondences": [{"world": [x,y,z], "pixel": [u,v]}]}

inline Json correspondences_to_json(const std::vector<Correspondence>& corr) {
  Json arr = Json::array();
  for (const auto& c : corr)
    arr.push_back(Json{{"world", {c.world.x, c.world.y, c.world.z}},
                       {"pixel", {c.pixel.u, c.pixel.v}}});
  return Json{{"correspondences", arr}};
}

inline std::vector<Correspondence> correspondences_from_json(const Json& j) {
  if (!j.contains("correspondences") || !j["correspondences"].is_array())
    throw FormatError("calibration file must contain a 'correspondences' array");
  std::vector<Correspondence> corr;
  for (const auto& item : j["correspondences"]) {
    if (!item.contains("world") || !item.contains("pixel") || !item["world"].is_array() ||
        item["world"].size() != 3 || !item["pixel"].is_array() || item["pixel"].size() != 2)
      throw FormatError("each correspondence needs 'world': [x,y,z] and 'pixel': [u,v]");
    Correspondence c;
    c.world.x = detail::require_number(item["world"][0], "world coordinate");
    c.world.y = detail::require_number(item["world"][1], "world coordinate");
    c.world.z = detail::require_number(item["world"][2], "world coordinate");
    c.pixel.u = detail::require_number(item["pixel"][0], "pixel coordinate");
    c.pixel.v = detail::require_number(item["pixel"][1], "pixel coordinate");
    if (!is_finite(c.world) || !std::isfinite(c.pixel.u) || !std::isfinite(c.pixel.v))
      throw ValueError("non-finite correspondence value");
    corr.push_back(c);
  }
  return corr;
}

inline Json projection_to_json(const ProjectionMatrix& p) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r)
    rows.push_back(Json::array({p.at(r, 0), p.at(r, 1), p.at(r, 2), p.at(r, 3)}));
  return Json{{"projection", rows}};
}

inline ProjectionMatrix projection_from_json(const Json& j) {
  if (!j.contains("projection") || !j["projection"].is_array() || j["projection"].size() != 3)
    throw FormatError("'projection' must be a 3x4 array of numbers");
  ProjectionMatrix p;
  for (int r = 0; r < 3; ++r) {
    const auto& row = j["projection"][static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4)
      throw FormatError("'projection' must be a 3x4 array of numbers");
    for (int c = 0; c < 4; ++c)
      p.at(r, c) = detail::require_number(row[static_cast<std::size_t>(c)], "projection entry");
  }
  return canonicalize(p);
}

// A calibration file carries either a solved "projection" or raw
// "correspondences"; the latter is solved on the spot.
inline ProjectionMatrix load_projection(const Json& j) {
  if (j.contains("projection")) return projection_from_json(j);
  if (j.contains("correspondences")) return solve_projection_dlt(correspondences_from_json(j));
  throw FormatError("calibration file needs 'projection' or 'correspondences'");
}

// -- ground truth / detections:
//    [{"frame": name, "boxes": [{"bbox": [...], "label": s, ("prob": p)}]}]

inline Json ground_truth_to_json(const std::vector<FrameGroundTruth>& frames) {
  Json arr = Json::array();
  for (const auto& f : frames) {
    Json boxes = Json::array();
    for (const auto& b : f.boxes)
      boxes.push_back(Json{{"bbox", detail::bbox_to_json(b.bbox)}, {"label", b.label}});
    arr.push_back(Json{{"frame", f.frame}, {"boxes", boxes}});
  }
  return arr;
}

inline std::vector<FrameGroundTruth> ground_truth_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("ground-truth file must be a JSON array of frames");
  std::vector<FrameGroundTruth> frames;
  for (const auto& fj : j) {
    if (!fj.contains("frame") || !fj["frame"].is_string() || !fj.contains("boxes") ||
        !fj["boxes"].is_array())
      throw FormatError("each frame needs 'frame': string and 'boxes': array");
    FrameGroundTruth f;
    f.frame = fj["frame"].get<std::string>();
    for (const auto& bj : fj["boxes"]) {
      if (!bj.contains("bbox") || !bj.contains("label") || !bj["label"].is_string())
        throw FormatError("each ground-truth box needs 'bbox' and 'label'");
      f.boxes.push_back(GroundTruthBox{detail::bbox_from_json(bj["bbox"]),
                                       bj["label"].get<std::string>()});
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

inline Json detections_to_json(const std::vector<FrameDetections>& frames) {
  Json arr = Json::array();
  for (const auto& f : frames) {
    Json boxes = Json::array();
    for (const auto& d : f.boxes)
      boxes.push_back(Json{{"bbox", detail::bbox_to_json(d.bbox)},
                           {"label", d.label},
                           {"prob", d.prob},
                           {"cluster_id", d.cluster_id}});
    arr.push_back(Json{{"frame", f.frame}, {"boxes", boxes}});
  }
  return arr;
}

inline std::vector<FrameDetections> detections_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("detections file must be a JSON array of frames");
  std::vector<FrameDetections> frames;
  for (const auto& fj : j) {
    if (!fj.contains("frame") || !fj["frame"].is_string() || !fj.contains("boxes") ||
        !fj["boxes"].is_array())
      throw FormatError("each frame needs 'frame': string and 'boxes': array");
    FrameDetections f;
    f.frame = fj["frame"].get<std::string>();
    for (const auto& bj : fj["boxes"]) {
      if (!bj.contains("bbox") || !bj.contains("label") || !bj["label"].is_string() ||
          !bj.contains("prob"))
        throw FormatError("each detection needs 'bbox', 'label' and 'prob'");
      Detection d{detail::bbox_from_json(bj["bbox"]), bj["label"].get<std::string>(),
                  detail::require_number(bj["prob"], "prob"), 0};
      if (!(d.prob >= 0.0 && d.prob <= 1.0))
        throw ValueError("detection prob " + std::to_string(d.prob) + " outside [0,1]");
      if (bj.contains("cluster_id") && bj["cluster_id"].is_number_integer())
        d.cluster_id = bj["cluster_id"].get<int>();
      f.boxes.push_back(std::move(d));
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

inline Json report_to_json(const EvalReport& r) {
  Json per_class = Json::object();
  for (const auto& [label, ap] : r.per_class_ap) per_class[label] = ap;
  return Json{{"mean_iou", r.mean_iou},
              {"mean_best_iou_per_gt", r.mean_best_iou_per_gt},
              {"per_class_ap", per_class},
              {"map", r.map_score},
              {"counts",
               Json{{"tp", r.counts.tp},
                    {"fp", r.counts.fp},
                    {"fn", r.counts.fn},
                    {"detections", r.counts.n_detections},
                    {"ground_truth", r.counts.n_gt},
                    {"frames", r.counts.frames}}}};
}

}  // namespace ddet
