#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ddet/errors.hpp"

namespace ddet {

// Thin SVD of an m x n matrix (m >= n) by one-sided Jacobi rotations.
// Singular values carry high relative accuracy, which the DLT degeneracy
// check depends on. Only sigma and V are computed; U is never needed here.
struct SvdResult {
  std::vector<double> sigma;  // n values, descending
  std::vector<double> v;      // n x n row-major; column j pairs with sigma[j]
};

inline SvdResult jacobi_svd(const std::vector<double>& a, std::size_t m, std::size_t n) {
  if (a.size() != m * n) throw InternalError("jacobi_svd: matrix size mismatch");
  if (m < n) throw InternalError("jacobi_svd: requires m >= n");

  // Column-major working copy; rotations touch contiguous memory.
  std::vector<double> w(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) w[c * m + r] = a[r * n + c];

  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const double eps = 1e-15;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* cp = &w[p * m];
        double* cq = &w[q * m];
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          alpha += cp[r] * cp[r];
          beta += cq[r] * cq[r];
          gamma += cp[r] * cq[r];
        }
        if (gamma == 0.0 || alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double wp = cp[r];
          cp[r] = c * wp - s * cq[r];
          cq[r] = s * wp + c * cq[r];
        }
        double* vp = &v[0];
        for (std::size_t r = 0; r < n; ++r) {
          const double vpr = vp[r * n + p];
          vp[r * n + p] = c * vpr - s * vp[r * n + q];
          vp[r * n + q] = s * vpr + c * vp[r * n + q];
        }
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  SvdResult res;
  res.sigma.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    double norm2 = 0.0;
    for (std::size_t r = 0; r < m; ++r) norm2 += w[c * m + r] * w[c * m + r];
    res.sigma[c] = std::sqrt(norm2);
  }

  // Sort descending, carrying V columns along.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t x, std::size_t y) { return res.sigma[x] > res.sigma[y]; });

  SvdResult sorted;
  sorted.sigma.resize(n);
  sorted.v.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    sorted.sigma[j] = res.sigma[perm[j]];
    for (std::size_t r = 0; r < n; ++r) sorted.v[r * n + j] = v[r * n + perm[j]];
  }
  return sorted;
}

}  // namespace ddet
