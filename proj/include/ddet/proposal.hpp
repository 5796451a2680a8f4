#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ddet/calibration.hpp"
#include "ddet/clustering.hpp"
#include "ddet/errors.hpp"
#include "ddet/geometry.hpp"

namespace ddet {

struct ProposalParams {
  double min_fraction = 0.02;   // minimum cluster size as fraction of the cloud
  double corner_frac = 0.15;    // top-corner trigger region, fraction of image w/h
  double margin_frac = 0.02;    // bbox expansion per side, fraction of hull w/h
  bool drop_behind_camera = true;

  void validate() const {
    if (!(min_fraction > 0.0 && min_fraction < 1.0))
      throw ConfigError("min_fraction must be in (0,1)");
    if (!(corner_frac > 0.0 && corner_frac < 0.5))
      throw ConfigError("corner_frac must be in (0,0.5)");
    if (!(margin_frac >= 0.0) || !std::isfinite(margin_frac))
      throw ConfigError("margin_frac must be >= 0");
  }
};

struct Proposal {
  BBox2D bbox;
  int cluster_id = 0;         // index into the cluster list the proposal came from
  int points_projected = 0;   // member points that landed inside the image
};

// Projects every member point and returns the clamped hull box expanded by
// margin_frac per side. Returns nullopt ("drop") when nothing lands inside
// the image or the box degenerates to zero area.
inline std::optional<Proposal> project_cluster_bbox(const ProjectionMatrix& p,
                                                    const Cluster& cluster,
                                                    const PointCloud& cloud, int img_w,
                                                    int img_h, const ProposalParams& params,
                                                    int cluster_id = 0) {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
  bool any = false;
  int inside = 0;
  for (int idx : cluster.indices) {
    const auto px = project_point(p, cloud.points[idx]);
    if (!px) {
      if (params.drop_behind_camera) continue;
      throw BehindCameraError("cluster point behind camera (index " + std::to_string(idx) + ")");
    }
    if (!any) {
      u_min = u_max = px->u;
      v_min = v_max = px->v;
      any = true;
    } else {
      u_min = std::min(u_min, px->u);
      u_max = std::max(u_max, px->u);
      v_min = std::min(v_min, px->v);
      v_max = std::max(v_max, px->v);
    }
    if (px->u >= 0.0 && px->u < img_w && px->v >= 0.0 && px->v < img_h) ++inside;
  }
  if (!any || inside == 0) return std::nullopt;

  const double mu = params.margin_frac * (u_max - u_min);
  const double mv = params.margin_frac * (v_max - v_min);
  u_min -= mu;
  u_max += mu;
  v_min -= mv;
  v_max += mv;
  if (!(u_max - u_min > 0.0) || !(v_max - v_min > 0.0)) return std::nullopt;

  // Clamp in floating point before casting so far-out hulls cannot overflow.
  const double x0d = std::max(std::floor(u_min), 0.0);
  const double y0d = std::max(std::floor(v_min), 0.0);
  const double x1d = std::min(std::ceil(u_max), static_cast<double>(img_w));
  const double y1d = std::min(std::ceil(v_max), static_cast<double>(img_h));
  if (!(x0d < x1d) || !(y0d < y1d)) return std::nullopt;

  return Proposal{BBox2D(static_cast<int>(x0d), static_cast<int>(y0d), static_cast<int>(x1d),
                         static_cast<int>(y1d)),
                  cluster_id, inside};
}

// Small clusters are noise: kept iff size/total >= min_fraction (boundary kept).
inline bool small_cluster_kept(std::size_t cluster_size, std::size_t total_points,
                               double min_fraction) {
  return static_cast<double>(cluster_size) / static_cast<double>(total_points) >= min_fraction;
}

inline std::vector<Cluster> denoise_small(const std::vector<Cluster>& clusters,
                                          std::size_t total_points, double min_fraction) {
  std::vector<Cluster> kept;
  kept.reserve(clusters.size());
  for (const Cluster& c : clusters)
    if (small_cluster_kept(c.indices.size(), total_points, min_fraction)) kept.push_back(c);
  return kept;
}

// Removes at most one proposal per top image corner: the largest-area box
// containing that corner pixel ((0,0) on the left, (w-1,0) on the right).
// Boxes that merely reach into a corner region without covering the corner
// pixel stay.
inline std::vector<Proposal> denoise_top_corners(const std::vector<Proposal>& proposals,
                                                 int img_w, int img_h, double corner_frac) {
  (void)img_h;
  if (!(corner_frac > 0.0 && corner_frac < 0.5))
    throw ConfigError("corner_frac must be in (0,0.5)");

  std::vector<bool> removed(proposals.size(), false);
  const int corners[2][2] = {{0, 0}, {img_w - 1, 0}};
  for (const auto& corner : corners) {
    int best = -1;
    long long best_area = -1;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      if (removed[i]) continue;
      const BBox2D& b = proposals[i].bbox;
      if (b.contains(corner[0], corner[1]) && b.area() > best_area) {
        best = static_cast<int>(i);
        best_area = b.area();
      }
    }
    if (best >= 0) removed[static_cast<std::size_t>(best)] = true;
  }

  std::vector<Proposal> kept;
  kept.reserve(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i)
    if (!removed[i]) kept.push_back(proposals[i]);
  return kept;
}

inline Image crop_subimage(const Image& image, const BBox2D& bbox) {
  if (bbox.x_min < 0 || bbox.y_min < 0 || bbox.x_max > image.width() ||
      bbox.y_max > image.height())
    throw BoundsError("crop bbox outside image bounds");
  Image out(bbox.width(), bbox.height());
  for (int j = 0; j < bbox.height(); ++j)
    for (int i = 0; i < bbox.width(); ++i)
      out.set(i, j, image.get(bbox.x_min + i, bbox.y_min + j));
  return out;
}

}  // namespace ddet
