#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "ddet/errors.hpp"
#include "ddet/geometry.hpp"
#include "ddet/svd.hpp"

namespace ddet {

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// 3x4 homogeneous camera matrix, row-major. Canonical form has Frobenius
// norm 1 and a non-negative m[2][3] (falling back to the first non-negligible
// entry of row 3 when m[2][3] is zero), so equal cameras compare equal.
struct ProjectionMatrix {
  std::array<double, 12> m{};

  double at(int r, int c) const { return m[static_cast<std::size_t>(r) * 4 + c]; }
  double& at(int r, int c) { return m[static_cast<std::size_t>(r) * 4 + c]; }
};

namespace detail {
constexpr double k_sign_epsilon = 1e-12;
}

inline ProjectionMatrix canonicalize(ProjectionMatrix p) {
  double norm2 = 0.0;
  for (double e : p.m) norm2 += e * e;
  const double norm = std::sqrt(norm2);
  if (norm == 0.0) throw DegenerateError("projection matrix is zero");
  for (double& e : p.m) e /= norm;

  double pivot = p.at(2, 3);
  if (std::abs(pivot) <= detail::k_sign_epsilon) {
    pivot = 0.0;
    for (int c = 0; c < 4 && pivot == 0.0; ++c)
      if (std::abs(p.at(2, c)) > detail::k_sign_epsilon) pivot = p.at(2, c);
  }
  if (pivot < 0.0)
    for (double& e : p.m) e = -e;
  return p;
}

struct Correspondence {
  Point3 world;
  Pixel pixel;
};

// Depth threshold below which a point counts as behind the camera.
constexpr double k_epsilon_w = 1e-9;

// Pinhole projection; nullopt when the point is behind the camera and the
// caller decides whether that is an error.
inline std::optional<Pixel> project_point(const ProjectionMatrix& p, const Point3& pt) {
  const double w = p.at(2, 0) * pt.x + p.at(2, 1) * pt.y + p.at(2, 2) * pt.z + p.at(2, 3);
  if (w <= k_epsilon_w) return std::nullopt;
  const double u = (p.at(0, 0) * pt.x + p.at(0, 1) * pt.y + p.at(0, 2) * pt.z + p.at(0, 3)) / w;
  const double v = (p.at(1, 0) * pt.x + p.at(1, 1) * pt.y + p.at(1, 2) * pt.z + p.at(1, 3)) / w;
  return Pixel{u, v};
}

struct DltOptions {
  bool hartley_normalize = true;
  // Degenerate when sigma_min / sigma_second_min of the design matrix
  // exceeds this (ambiguous null space, e.g. all-coplanar points).
  double degeneracy_ratio = 0.1;
};

// Direct linear transform: assemble the 2n x 12 design matrix from
// u*(p3.X) - p1.X = 0 and v*(p3.X) - p2.X = 0, take the right-singular
// vector with the smallest singular value, undo the normalization.
inline ProjectionMatrix solve_projection_dlt(const std::vector<Correspondence>& corr,
                                             const DltOptions& opts = {}) {
  if (corr.size() < 6)
    throw ArityError("DLT needs at least 6 correspondences, got " + std::to_string(corr.size()));
  for (const auto& c : corr)
    if (!is_finite(c.world) || !std::isfinite(c.pixel.u) || !std::isfinite(c.pixel.v))
      throw ValueError("non-finite correspondence");

  const std::size_t n = corr.size();

  // Hartley normalization: pixels to centroid 0 / RMS sqrt(2), world points
  // to centroid 0 / RMS sqrt(3).
  double su = 0, sv = 0, sx = 0, sy = 0, sz = 0;
  for (const auto& c : corr) {
    su += c.pixel.u;
    sv += c.pixel.v;
    sx += c.world.x;
    sy += c.world.y;
    sz += c.world.z;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double cu = su * inv_n, cv = sv * inv_n;
  const double cx = sx * inv_n, cy = sy * inv_n, cz = sz * inv_n;

  double scale_px = 1.0, scale_w = 1.0;
  if (opts.hartley_normalize) {
    double rms_px = 0, rms_w = 0;
    for (const auto& c : corr) {
      const double du = c.pixel.u - cu, dv = c.pixel.v - cv;
      rms_px += du * du + dv * dv;
      const double dx = c.world.x - cx, dy = c.world.y - cy, dz = c.world.z - cz;
      rms_w += dx * dx + dy * dy + dz * dz;
    }
    rms_px = std::sqrt(rms_px * inv_n);
    rms_w = std::sqrt(rms_w * inv_n);
    if (rms_px == 0.0) throw DegenerateError("all pixel coordinates coincide");
    if (rms_w == 0.0) throw DegenerateError("all world points coincide");
    scale_px = std::sqrt(2.0) / rms_px;
    scale_w = std::sqrt(3.0) / rms_w;
  }

  auto norm_px = [&](const Pixel& px) {
    return opts.hartley_normalize ? Pixel{(px.u - cu) * scale_px, (px.v - cv) * scale_px} : px;
  };
  auto norm_w = [&](const Point3& p) {
    return opts.hartley_normalize
               ? Point3{(p.x - cx) * scale_w, (p.y - cy) * scale_w, (p.z - cz) * scale_w}
               : p;
  };

  std::vector<double> a(2 * n * 12, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 pw = norm_w(corr[i].world);
    const Pixel px = norm_px(corr[i].pixel);
    const double xh[4] = {pw.x, pw.y, pw.z, 1.0};
    double* r0 = &a[(2 * i) * 12];
    double* r1 = &a[(2 * i + 1) * 12];
    for (int k = 0; k < 4; ++k) {
      r0[k] = -xh[k];
      r0[8 + k] = px.u * xh[k];
      r1[4 + k] = -xh[k];
      r1[8 + k] = px.v * xh[k];
    }
  }

  const SvdResult svd = jacobi_svd(a, 2 * n, 12);
  const double sig_last = svd.sigma[11];
  const double sig_prev = svd.sigma[10];
  if (sig_prev <= 0.0 || sig_last / sig_prev > opts.degeneracy_ratio)
    throw DegenerateError("ambiguous DLT null space (degenerate correspondences, ratio " +
                          std::to_string(sig_prev <= 0.0 ? 1.0 : sig_last / sig_prev) + ")");

  ProjectionMatrix pn;
  for (int i = 0; i < 12; ++i) pn.m[static_cast<std::size_t>(i)] = svd.v[static_cast<std::size_t>(i) * 12 + 11];

  if (!opts.hartley_normalize) return canonicalize(pn);

  // P = T^-1 * Pn * U with T the pixel and U the world normalizer.
  // T^-1 = [[1/s, 0, cu], [0, 1/s, cv], [0, 0, 1]]
  ProjectionMatrix tmp;
  const double inv_s = 1.0 / scale_px;
  for (int c = 0; c < 4; ++c) {
    tmp.at(0, c) = inv_s * pn.at(0, c) + cu * pn.at(2, c);
    tmp.at(1, c) = inv_s * pn.at(1, c) + cv * pn.at(2, c);
    tmp.at(2, c) = pn.at(2, c);
  }
  // U = [[s, 0, 0, -s*cx], [0, s, 0, -s*cy], [0, 0, s, -s*cz], [0, 0, 0, 1]]
  ProjectionMatrix out;
  for (int r = 0; r < 3; ++r) {
    out.at(r, 0) = tmp.at(r, 0) * scale_w;
    out.at(r, 1) = tmp.at(r, 1) * scale_w;
    out.at(r, 2) = tmp.at(r, 2) * scale_w;
    out.at(r, 3) = -scale_w * (tmp.at(r, 0) * cx + tmp.at(r, 1) * cy + tmp.at(r, 2) * cz) +
                   tmp.at(r, 3);
  }
  return canonicalize(out);
}

// RMS of pixel distances between projected world points and measured pixels.
inline double reprojection_rms(const ProjectionMatrix& p, const std::vector<Correspondence>& corr) {
  if (corr.empty()) throw ArityError("reprojection_rms needs at least one correspondence");
  double sum = 0.0;
  for (const auto& c : corr) {
    const auto px = project_point(p, c.world);
    if (!px) throw BehindCameraError("correspondence projects behind the camera");
    const double du = px->u - c.pixel.u;
    const double dv = px->v - c.pixel.v;
    sum += du * du + dv * dv;
  }
  return std::sqrt(sum / static_cast<double>(corr.size()));
}

}  // namespace ddet
