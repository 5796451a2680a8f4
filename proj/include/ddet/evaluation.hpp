#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddet/classifier.hpp"
#include "ddet/errors.hpp"
#include "ddet/geometry.hpp"

namespace ddet {

struct GroundTruthBox {
  BBox2D bbox;
  std::string label;
};

// Intersection over union with exact integer areas, so results agree with a
// pixel-counting oracle bit for bit.
inline double iou(const BBox2D& a, const BBox2D& b) {
  const long long iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const long long ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0 || ih <= 0) return 0.0;
  const long long inter = iw * ih;
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct Match {
  int det = 0;
  int gt = 0;
  double iou = 0.0;
};

// Greedy one-to-one matching: detections in descending probability (index
// ascending on ties) each claim the unmatched ground-truth box of highest
// IoU >= iou_thresh, same label required when class_aware.
inline std::vector<Match> match_greedy(const std::vector<Detection>& dets,
                                       const std::vector<GroundTruthBox>& gts,
                                       double iou_thresh, bool class_aware) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0))
    throw ConfigError("iou_thresh must be in (0,1]");

  std::vector<int> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dets[a].prob != dets[b].prob) return dets[a].prob > dets[b].prob;
    return a < b;
  });

  std::vector<bool> gt_used(gts.size(), false);
  std::vector<Match> matches;
  for (int di : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_used[gi]) continue;
      if (class_aware && gts[gi].label != dets[di].label) continue;
      const double v = iou(dets[di].bbox, gts[gi].bbox);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<std::size_t>(best_gt)] = true;
      matches.push_back(Match{di, best_gt, best_iou});
    }
  }
  return matches;
}

// Average precision for one class over a whole dataset, VOC-2010-style:
// all detections of the class ranked by probability, TP/FP assigned by
// per-frame greedy matching, then the area under the interpolated
// precision envelope. nullopt when the class has no ground truth (such
// classes are excluded from mAP).
inline std::optional<double> average_precision(
    const std::vector<std::vector<Detection>>& dets_per_frame,
    const std::vector<std::vector<GroundTruthBox>>& gts_per_frame, const std::string& label,
    double iou_thresh) {
  if (dets_per_frame.size() != gts_per_frame.size())
    throw InputError("detection and ground-truth frame counts differ");

  long long n_gt = 0;
  for (const auto& frame : gts_per_frame)
    for (const auto& g : frame)
      if (g.label == label) ++n_gt;
  if (n_gt == 0) return std::nullopt;

  struct Ranked {
    double prob;
    int frame;
    int det;
  };
  std::vector<Ranked> ranked;
  for (std::size_t f = 0; f < dets_per_frame.size(); ++f)
    for (std::size_t d = 0; d < dets_per_frame[f].size(); ++d)
      if (dets_per_frame[f][d].label == label)
        ranked.push_back(Ranked{dets_per_frame[f][d].prob, static_cast<int>(f),
                                static_cast<int>(d)});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.det < b.det;
  });

  std::vector<std::vector<bool>> gt_used(gts_per_frame.size());
  for (std::size_t f = 0; f < gts_per_frame.size(); ++f)
    gt_used[f].assign(gts_per_frame[f].size(), false);

  std::vector<bool> is_tp(ranked.size(), false);
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& r = ranked[k];
    const auto& det = dets_per_frame[static_cast<std::size_t>(r.frame)][static_cast<std::size_t>(r.det)];
    const auto& gts = gts_per_frame[static_cast<std::size_t>(r.frame)];
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_used[static_cast<std::size_t>(r.frame)][gi] || gts[gi].label != label) continue;
      const double v = iou(det.bbox, gts[gi].bbox);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<std::size_t>(r.frame)][static_cast<std::size_t>(best_gt)] = true;
      is_tp[k] = true;
    }
  }

  // Precision at each rank, then the running-max envelope from the right.
  std::vector<double> precision(ranked.size());
  long long tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (is_tp[k]) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = ranked.size(); k-- > 1;)
    precision[k - 1] = std::max(precision[k - 1], precision[k]);

  double ap = 0.0;
  const double recall_step = 1.0 / static_cast<double>(n_gt);
  for (std::size_t k = 0; k < ranked.size(); ++k)
    if (is_tp[k]) ap += recall_step * precision[k];
  return ap;
}

struct EvalParams {
  double iou_thresh = 0.5;
  bool class_aware = true;
};

struct EvalCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long n_detections = 0;
  long long n_gt = 0;
  long long frames = 0;
};

struct EvalReport {
  double mean_iou = 0.0;              // mean IoU over matched pairs
  double mean_best_iou_per_gt = 0.0;  // alternative reading, reported alongside
  std::map<std::string, double> per_class_ap;
  double map_score = 0.0;
  std::vector<std::vector<Match>> matches;  // per frame
  EvalCounts counts;
};

inline EvalReport evaluate(const std::vector<std::vector<Detection>>& dets_per_frame,
                           const std::vector<std::vector<GroundTruthBox>>& gts_per_frame,
                           const EvalParams& params = {}) {
  if (dets_per_frame.size() != gts_per_frame.size())
    throw InputError("frame-count mismatch: " + std::to_string(dets_per_frame.size()) +
                     " detection frames vs " + std::to_string(gts_per_frame.size()) +
                     " ground-truth frames");
  if (dets_per_frame.empty()) throw InputError("empty dataset: no frames to evaluate");

  EvalReport report;
  report.counts.frames = static_cast<long long>(dets_per_frame.size());

  double iou_sum = 0.0;
  long long iou_count = 0;
  double best_iou_sum = 0.0;
  long long gt_total = 0;
  for (std::size_t f = 0; f < dets_per_frame.size(); ++f) {
    const auto& dets = dets_per_frame[f];
    const auto& gts = gts_per_frame[f];
    auto frame_matches = match_greedy(dets, gts, params.iou_thresh, params.class_aware);
    for (const Match& m : frame_matches) {
      iou_sum += m.iou;
      ++iou_count;
    }
    report.counts.tp += static_cast<long long>(frame_matches.size());
    report.counts.n_detections += static_cast<long long>(dets.size());
    report.counts.n_gt += static_cast<long long>(gts.size());
    report.matches.push_back(std::move(frame_matches));

    for (const auto& g : gts) {
      double best = 0.0;
      for (const auto& d : dets) {
        if (params.class_aware && d.label != g.label) continue;
        best = std::max(best, iou(d.bbox, g.bbox));
      }
      best_iou_sum += best;
      ++gt_total;
    }
  }
  report.counts.fp = report.counts.n_detections - report.counts.tp;
  report.counts.fn = report.counts.n_gt - report.counts.tp;
  report.mean_iou = iou_count > 0 ? iou_sum / static_cast<double>(iou_count) : 0.0;
  report.mean_best_iou_per_gt = gt_total > 0 ? best_iou_sum / static_cast<double>(gt_total) : 0.0;

  std::set<std::string> classes;
  for (const auto& frame : gts_per_frame)
    for (const auto& g : frame) classes.insert(g.label);

  double ap_sum = 0.0;
  for (const std::string& label : classes) {
    const auto ap = average_precision(dets_per_frame, gts_per_frame, label, params.iou_thresh);
    if (ap) {
      report.per_class_ap[label] = *ap;
      ap_sum += *ap;
    }
  }
  report.map_score =
      report.per_class_ap.empty() ? 0.0 : ap_sum / static_cast<double>(report.per_class_ap.size());
  return report;
}

}  // namespace ddet
