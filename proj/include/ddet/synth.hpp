#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddet/calibration.hpp"
#include "ddet/clustering.hpp"
#include "ddet/errors.hpp"
#include "ddet/evaluation.hpp"
#include "ddet/geometry.hpp"
#include "ddet/io.hpp"
#include "ddet/json_io.hpp"
#include "ddet/rng.hpp"

namespace ddet {

// Deterministic RGB-D scene generator. A Scene is a pure function of its
// SceneSpec: same spec, byte-identical output. Objects are flat-colored
// cuboids and spheres sampled densely enough that each one forms exactly one
// cluster at default clustering parameters, with surface gaps wide enough
// that moderate noise cannot merge neighbors.

constexpr Rgb k_background_color{200, 200, 200};
constexpr Rgb k_floor_color{125, 115, 105};

struct SceneSpec {
  std::uint64_t seed = 1;
  int n_objects = 4;
  int img_w = 640;
  int img_h = 480;
  bool cuboids = true;
  bool spheres = true;
  double cuboid_edge_min = 0.15;  // meters
  double cuboid_edge_max = 0.40;
  double sphere_radius_min = 0.08;
  double sphere_radius_max = 0.20;
  Palette palette = default_palette();
  double noise_sigma = 0.0;  // per-coordinate Gaussian depth noise, meters
  bool floor = false;
};

struct Scene {
  PointCloud cloud;
  Image image;
  ProjectionMatrix projection;
  std::vector<GroundTruthBox> gt;
  std::vector<Correspondence> correspondences;
};

namespace detail {

struct SynthObject {
  bool is_sphere = false;
  Point3 center;
  Point3 half;     // cuboid half extents; spheres use half.x as radius
  std::string label;
  Rgb color;
  Point3 aabb_min;
  Point3 aabb_max;
};

inline void check_scene_spec(const SceneSpec& s) {
  if (s.n_objects < 1) throw ConfigError("n_objects must be >= 1");
  if (s.img_w < 64 || s.img_h < 64) throw ConfigError("image must be at least 64x64");
  if (!s.cuboids && !s.spheres) throw ConfigError("at least one object kind must be enabled");
  if (s.palette.empty()) throw ConfigError("palette must not be empty");
  if (!(s.cuboid_edge_min > 0.0 && s.cuboid_edge_max >= s.cuboid_edge_min))
    throw ConfigError("bad cuboid edge range");
  if (!(s.sphere_radius_min > 0.0 && s.sphere_radius_max >= s.sphere_radius_min))
    throw ConfigError("bad sphere radius range");
  if (!(s.noise_sigma >= 0.0) || !std::isfinite(s.noise_sigma))
    throw ConfigError("noise_sigma must be >= 0");
}

// Fixed pinhole camera for all synthetic scenes.
inline double synth_focal(int img_w) { return 300.0 * img_w / 640.0; }

inline ProjectionMatrix synth_camera(int img_w, int img_h) {
  const double f = synth_focal(img_w);
  ProjectionMatrix p;
  p.at(0, 0) = f;
  p.at(0, 2) = img_w / 2.0;
  p.at(1, 1) = f;
  p.at(1, 2) = img_h / 2.0;
  p.at(2, 2) = 1.0;
  return canonicalize(p);
}

inline void sample_cuboid(const SynthObject& o, double spacing, std::vector<Point3>& out) {
  const double ext[3] = {o.half.x, o.half.y, o.half.z};
  // axis = face normal; the other two axes span the face grid
  for (int axis = 0; axis < 3; ++axis) {
    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    const int nu = std::max(2, static_cast<int>(std::ceil(2.0 * ext[ua] / spacing)) + 1);
    const int nv = std::max(2, static_cast<int>(std::ceil(2.0 * ext[va] / spacing)) + 1);
    for (int side = -1; side <= 1; side += 2)
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
          double c[3];
          c[axis] = side * ext[axis];
          c[ua] = -ext[ua] + 2.0 * ext[ua] * i / (nu - 1);
          c[va] = -ext[va] + 2.0 * ext[va] * j / (nv - 1);
          out.push_back(Point3{o.center.x + c[0], o.center.y + c[1], o.center.z + c[2]});
        }
  }
}

inline void sample_sphere(const SynthObject& o, double spacing, std::vector<Point3>& out) {
  const double r = o.half.x;
  const double pi = 3.14159265358979323846;
  const int n_theta = std::max(3, static_cast<int>(std::ceil(pi * r / spacing)) + 1);
  for (int i = 0; i < n_theta; ++i) {
    const double theta = pi * i / (n_theta - 1);
    const double ring_r = r * std::sin(theta);
    const int n_phi = std::max(1, static_cast<int>(std::ceil(2.0 * pi * ring_r / spacing)));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * pi * j / n_phi;
      out.push_back(Point3{o.center.x + ring_r * std::cos(phi),
                           o.center.y + r * std::cos(theta),
                           o.center.z + ring_r * std::sin(phi)});
    }
  }
}

}  // namespace detail

inline Scene generate_scene(const SceneSpec& spec) {
  detail::check_scene_spec(spec);
  const double tau = ClusterParams{}.tau;
  const double f = detail::synth_focal(spec.img_w);
  const double cx = spec.img_w / 2.0, cy = spec.img_h / 2.0;

  Scene scene;
  scene.projection = detail::synth_camera(spec.img_w, spec.img_h);
  Xoshiro256ss rng(spec.seed);

  std::vector<std::string> labels;
  for (const auto& [label, color] : spec.palette) labels.push_back(label);

  // Place objects by rejection sampling: surface gaps of at least 3*tau in 3D
  // (noise cannot bridge neighbors) and non-overlapping image hulls (no
  // occlusion, so ground truth stays unambiguous).
  std::vector<detail::SynthObject> objects;
  std::vector<std::array<double, 4>> hulls_px;  // u0, v0, u1, v1 with pad
  for (int i = 0; i < spec.n_objects; ++i) {
    detail::SynthObject obj;
    const std::size_t li = static_cast<std::size_t>(rng.below(labels.size()));
    obj.label = labels[li];
    obj.color = spec.palette.at(obj.label);
    obj.is_sphere = spec.cuboids && spec.spheres ? rng.below(2) == 1 : spec.spheres;
    if (obj.is_sphere) {
      const double r = rng.uniform(spec.sphere_radius_min, spec.sphere_radius_max);
      obj.half = Point3{r, r, r};
    } else {
      obj.half = Point3{rng.uniform(spec.cuboid_edge_min, spec.cuboid_edge_max) / 2.0,
                        rng.uniform(spec.cuboid_edge_min, spec.cuboid_edge_max) / 2.0,
                        rng.uniform(spec.cuboid_edge_min, spec.cuboid_edge_max) / 2.0};
    }
    const double bound_r =
        obj.is_sphere ? obj.half.x
                      : std::sqrt(obj.half.x * obj.half.x + obj.half.y * obj.half.y +
                                  obj.half.z * obj.half.z);

    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double z = rng.uniform(1.2, 3.8);
      if (z - bound_r < 0.3) continue;  // object too large for this depth
      const double proj_r = f * bound_r / (z - bound_r) + 8.0;
      const double u_lo = proj_r, u_hi = spec.img_w - proj_r;
      const double v_lo = proj_r, v_hi = spec.img_h - proj_r;
      const double u = rng.uniform(0.0, static_cast<double>(spec.img_w));
      const double v = rng.uniform(0.0, static_cast<double>(spec.img_h));
      if (u < u_lo || u > u_hi || v < v_lo || v > v_hi) continue;

      obj.center = Point3{(u - cx) * z / f, (v - cy) * z / f, z};
      obj.aabb_min = Point3{obj.center.x - obj.half.x, obj.center.y - obj.half.y,
                            obj.center.z - obj.half.z};
      obj.aabb_max = Point3{obj.center.x + obj.half.x, obj.center.y + obj.half.y,
                            obj.center.z + obj.half.z};

      const double gap = 1.5 * tau;  // per box; 3*tau between surfaces
      bool ok = true;
      for (const auto& other : objects) {
        const bool disjoint = obj.aabb_max.x + gap < other.aabb_min.x - gap ||
                              other.aabb_max.x + gap < obj.aabb_min.x - gap ||
                              obj.aabb_max.y + gap < other.aabb_min.y - gap ||
                              other.aabb_max.y + gap < obj.aabb_min.y - gap ||
                              obj.aabb_max.z + gap < other.aabb_min.z - gap ||
                              other.aabb_max.z + gap < obj.aabb_min.z - gap;
        if (!disjoint) {
          ok = false;
          break;
        }
      }
      if (ok) {
        const double hull_r = f * bound_r / (z - bound_r) + 4.0;
        const std::array<double, 4> hull{u - hull_r, v - hull_r, u + hull_r, v + hull_r};
        for (const auto& h : hulls_px)
          if (hull[0] < h[2] && h[0] < hull[2] && hull[1] < h[3] && h[1] < hull[3]) {
            ok = false;
            break;
          }
        if (ok) {
          hulls_px.push_back(hull);
          placed = true;
        }
      }
    }
    if (!placed)
      throw PlacementError("could not place object " + std::to_string(i + 1) + " of " +
                           std::to_string(spec.n_objects) +
                           " after 1000 rejection-sampling attempts");
    objects.push_back(obj);
  }

  // Surface sampling. Spacing is capped by three constraints: tau/3 so each
  // object is one cluster, ~1.8px projected pitch so 2x2 splats render solid
  // surfaces, and a point budget floor so small objects are not starved
  // relative to large ones (the small-cluster denoiser works on fractions).
  std::vector<std::vector<Point3>> surface(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const double bound_r =
        o.is_sphere ? o.half.x
                    : std::sqrt(o.half.x * o.half.x + o.half.y * o.half.y + o.half.z * o.half.z);
    const double z_near = o.center.z - bound_r;
    const double area =
        o.is_sphere ? 4.0 * 3.14159265358979323846 * o.half.x * o.half.x
                    : 8.0 * (o.half.x * o.half.y + o.half.y * o.half.z + o.half.z * o.half.x);
    double spacing = std::min({tau / 3.0, 1.8 * z_near / f, std::sqrt(area / 3000.0)});
    spacing = std::max(spacing, 1e-3);
    if (o.is_sphere)
      detail::sample_sphere(o, spacing, surface[i]);
    else
      detail::sample_cuboid(o, spacing, surface[i]);
  }

  std::vector<Point3> floor_pts;
  if (spec.floor) {
    double floor_y = 1.0;
    for (const auto& o : objects) floor_y = std::max(floor_y, o.aabb_max.y + 3.0 * tau + 0.05);
    const double s = tau / 3.0;
    for (double z = 0.9; z <= 4.6; z += s)
      for (double x = -2.2; x <= 2.2; x += s) floor_pts.push_back(Point3{x, floor_y, z});
  }

  // Ground truth: hull of each object's projected noiseless surface.
  for (std::size_t i = 0; i < objects.size(); ++i) {
    double u0 = 0, v0 = 0, u1 = 0, v1 = 0;
    bool any = false;
    for (const Point3& p : surface[i]) {
      const auto px = project_point(scene.projection, p);
      if (!px) continue;
      if (!any) {
        u0 = u1 = px->u;
        v0 = v1 = px->v;
        any = true;
      } else {
        u0 = std::min(u0, px->u);
        u1 = std::max(u1, px->u);
        v0 = std::min(v0, px->v);
        v1 = std::max(v1, px->v);
      }
    }
    if (!any) throw InternalError("synth object projected nowhere");
    const int x0 = std::max(static_cast<int>(std::floor(u0)), 0);
    const int y0 = std::max(static_cast<int>(std::floor(v0)), 0);
    const int x1 = std::min(static_cast<int>(std::ceil(u1)), spec.img_w);
    const int y1 = std::min(static_cast<int>(std::ceil(v1)), spec.img_h);
    scene.gt.push_back(GroundTruthBox{BBox2D(x0, y0, x1, y1), objects[i].label});
  }

  // 12 exact correspondences: 8 frustum anchors plus 4 corners of the first
  // object's bounding box. Pixels come straight from the scene camera, so a
  // DLT on them recovers the projection to numerical precision.
  {
    const double anchor_uv[4][2] = {{0.1 * spec.img_w, 0.1 * spec.img_h},
                                    {0.9 * spec.img_w, 0.1 * spec.img_h},
                                    {0.1 * spec.img_w, 0.9 * spec.img_h},
                                    {0.9 * spec.img_w, 0.9 * spec.img_h}};
    for (double z : {1.2, 3.9})
      for (const auto& uv : anchor_uv) {
        const Point3 w{(uv[0] - cx) * z / f, (uv[1] - cy) * z / f, z};
        const auto px = project_point(scene.projection, w);
        scene.correspondences.push_back(Correspondence{w, *px});
      }
    const auto& o = objects[0];
    const Point3 corners[4] = {
        {o.aabb_min.x, o.aabb_min.y, o.aabb_min.z},
        {o.aabb_max.x, o.aabb_max.y, o.aabb_min.z},
        {o.aabb_min.x, o.aabb_max.y, o.aabb_max.z},
        {o.aabb_max.x, o.aabb_min.y, o.aabb_max.z},
    };
    for (const Point3& w : corners) {
      const auto px = project_point(scene.projection, w);
      scene.correspondences.push_back(Correspondence{w, *px});
    }
  }

  // Render: painter's algorithm over the noiseless points (the RGB camera
  // does not see depth noise), far points first, 2x2 splats.
  {
    struct Splat {
      double z;
      std::size_t order;
      float u, v;
      Rgb color;
    };
    std::vector<Splat> splats;
    std::size_t order = 0;
    auto add_splats = [&](const std::vector<Point3>& pts, Rgb color) {
      for (const Point3& p : pts) {
        const auto px = project_point(scene.projection, p);
        ++order;
        if (!px) continue;
        splats.push_back(Splat{p.z, order, static_cast<float>(px->u),
                               static_cast<float>(px->v), color});
      }
    };
    for (std::size_t i = 0; i < objects.size(); ++i) add_splats(surface[i], objects[i].color);
    add_splats(floor_pts, k_floor_color);

    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
      if (a.z != b.z) return a.z > b.z;
      return a.order < b.order;
    });

    scene.image = Image(spec.img_w, spec.img_h, k_background_color);
    for (const Splat& s : splats) {
      const int px = static_cast<int>(std::floor(s.u));
      const int py = static_cast<int>(std::floor(s.v));
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          if (scene.image.in_bounds(px + dx, py + dy))
            scene.image.set(px + dx, py + dy, s.color);
    }
  }

  // Cloud: object surfaces then floor, with per-coordinate Gaussian noise.
  std::vector<Rgb> colors;
  for (std::size_t i = 0; i < objects.size(); ++i)
    for (const Point3& p : surface[i]) {
      scene.cloud.points.push_back(p);
      colors.push_back(objects[i].color);
    }
  for (const Point3& p : floor_pts) {
    scene.cloud.points.push_back(p);
    colors.push_back(k_floor_color);
  }
  if (spec.noise_sigma > 0.0)
    for (Point3& p : scene.cloud.points) {
      p.x += spec.noise_sigma * rng.gaussian();
      p.y += spec.noise_sigma * rng.gaussian();
      p.z += spec.noise_sigma * rng.gaussian();
    }
  scene.cloud.colors = std::move(colors);

  return scene;
}

// Two dense solid balls with the given surface gap; the clustering
// performance workload.
inline PointCloud two_blob_cloud(int n_points, double gap, std::uint64_t seed) {
  if (n_points < 2) throw ConfigError("two_blob_cloud needs at least 2 points");
  Xoshiro256ss rng(seed);
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n_points));
  const double r = 0.5;
  const double dx = r + gap / 2.0;
  for (int i = 0; i < n_points; ++i) {
    const double sign = i < n_points / 2 ? -1.0 : 1.0;
    double gx = rng.gaussian(), gy = rng.gaussian(), gz = rng.gaussian();
    const double norm = std::sqrt(gx * gx + gy * gy + gz * gz);
    if (norm == 0.0) {
      gx = 1.0;
      gy = gz = 0.0;
    }
    const double rad = r * std::cbrt(rng.uniform());
    const double inv = rad / (norm == 0.0 ? 1.0 : norm);
    cloud.points.push_back(Point3{sign * dx + gx * inv, gy * inv, 2.0 + gz * inv});
  }
  return cloud;
}

// Writes cloud.pcd, image.ppm, calib.json and gt.json into `dir`. Refuses to
// overwrite an existing scene unless `force`.
inline void write_scene(const Scene& scene, const std::string& dir, bool force = false) {
  if (dir.empty()) throw IoError("output directory path is empty");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  const fs::path base(dir);
  if (!force && fs::exists(base / "cloud.pcd"))
    throw IoError(dir + " already contains a scene (use --force to overwrite)");

  std::string frame = base.filename().string();
  if (frame.empty()) frame = base.parent_path().filename().string();

  write_file((base / "cloud.pcd").string(), write_pcd(scene.cloud));
  write_file((base / "image.ppm").string(), write_ppm(scene.image));
  write_file((base / "calib.json").string(),
             correspondences_to_json(scene.correspondences).dump(2) + "\n");
  std::vector<FrameGroundTruth> frames{{frame, scene.gt}};
  write_file((base / "gt.json").string(), ground_truth_to_json(frames).dump(2) + "\n");
}

}  // namespace ddet
