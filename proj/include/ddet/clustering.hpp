#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <unordered_map>
#include <vector>

#include "ddet/errors.hpp"
#include "ddet/geometry.hpp"

namespace ddet {

// Single-linkage clustering cut at distance tau: clusters are the connected
// components of the graph joining point pairs at Euclidean distance <= tau.
// Components smaller than min_points are dropped.
struct ClusterParams {
  double tau = 0.06;     // linkage cutoff, meters
  int min_points = 50;   // absolute floor on cluster size
};

struct Cluster {
  std::vector<int> indices;  // strictly increasing indices into the cloud
  Point3 centroid;           // mean of members, summed in ascending index order
  Point3 aabb_min;
  Point3 aabb_max;

  int size() const { return static_cast<int>(indices.size()); }
};

namespace detail {

inline void check_cluster_params(const ClusterParams& p) {
  if (!(p.tau > 0.0) || !std::isfinite(p.tau))
    throw ConfigError("tau must be positive and finite");
  if (p.min_points < 1) throw ConfigError("min_points must be >= 1");
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];  // path halving
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
  std::vector<int> parent;
  std::vector<int> size;
};

inline double dist2(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Components -> clusters: drop small ones, order by descending size then
// smallest member index, centroid accumulated in ascending index order so
// results are bit-reproducible.
inline std::vector<Cluster> finalize_components(const PointCloud& cloud, UnionFind& uf,
                                                int min_points) {
  const int n = static_cast<int>(cloud.size());
  std::unordered_map<int, int> root_to_slot;
  std::vector<std::vector<int>> members;
  for (int i = 0; i < n; ++i) {
    int r = uf.find(i);
    auto [it, inserted] = root_to_slot.try_emplace(r, static_cast<int>(members.size()));
    if (inserted) members.emplace_back();
    members[it->second].push_back(i);
  }

  std::vector<Cluster> clusters;
  for (auto& m : members) {
    if (static_cast<int>(m.size()) < min_points) continue;
    Cluster c;
    c.indices = std::move(m);  // ascending by construction
    double sx = 0, sy = 0, sz = 0;
    c.aabb_min = c.aabb_max = cloud.points[c.indices[0]];
    for (int idx : c.indices) {
      const Point3& p = cloud.points[idx];
      sx += p.x;
      sy += p.y;
      sz += p.z;
      c.aabb_min.x = std::min(c.aabb_min.x, p.x);
      c.aabb_min.y = std::min(c.aabb_min.y, p.y);
      c.aabb_min.z = std::min(c.aabb_min.z, p.z);
      c.aabb_max.x = std::max(c.aabb_max.x, p.x);
      c.aabb_max.y = std::max(c.aabb_max.y, p.y);
      c.aabb_max.z = std::max(c.aabb_max.z, p.z);
    }
    const double inv = 1.0 / static_cast<double>(c.indices.size());
    c.centroid = Point3{sx * inv, sy * inv, sz * inv};
    clusters.push_back(std::move(c));
  }

  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    if (a.indices.size() != b.indices.size()) return a.indices.size() > b.indices.size();
    return a.indices[0] < b.indices[0];
  });
  return clusters;
}

}  // namespace detail

// O(n^2) pairwise reference implementation; the oracle cluster_grid is
// checked against.
inline std::vector<Cluster> cluster_bruteforce(const PointCloud& cloud,
                                               const ClusterParams& params) {
  detail::check_cluster_params(params);
  const int n = static_cast<int>(cloud.size());
  detail::UnionFind uf(cloud.size());
  const double tau2 = params.tau * params.tau;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (detail::dist2(cloud.points[i], cloud.points[j]) <= tau2) uf.unite(i, j);
  return detail::finalize_components(cloud, uf, params.min_points);
}

// Uniform spatial hash grid with cell edge ~tau: any pair within tau lies in
// the same or an adjacent cell, so only the 3x3x3 neighborhood is scanned.
// Produces exactly the same partition and ordering as cluster_bruteforce.
inline std::vector<Cluster> cluster_grid(const PointCloud& cloud, const ClusterParams& params) {
  detail::check_cluster_params(params);
  const int n = static_cast<int>(cloud.size());
  if (n == 0) return {};

  // Slightly inflated cell size so that a pair at distance exactly tau can
  // never straddle two cells after floating-point division.
  const double cell = params.tau * (1.0 + 1e-9);
  const double inv_cell = 1.0 / cell;

  constexpr std::int64_t k_offset = std::int64_t{1} << 20;  // 21-bit lanes
  auto pack = [](std::int64_t cx, std::int64_t cy, std::int64_t cz) -> std::uint64_t {
    return (static_cast<std::uint64_t>(cx + k_offset) << 42) |
           (static_cast<std::uint64_t>(cy + k_offset) << 21) |
           static_cast<std::uint64_t>(cz + k_offset);
  };

  std::vector<std::uint64_t> cell_key(n);
  for (int i = 0; i < n; ++i) {
    const Point3& p = cloud.points[i];
    const std::int64_t cx = static_cast<std::int64_t>(std::floor(p.x * inv_cell));
    const std::int64_t cy = static_cast<std::int64_t>(std::floor(p.y * inv_cell));
    const std::int64_t cz = static_cast<std::int64_t>(std::floor(p.z * inv_cell));
    if (std::abs(cx) >= k_offset - 1 || std::abs(cy) >= k_offset - 1 || std::abs(cz) >= k_offset - 1)
      throw ValueError("point coordinates too large for grid clustering at this tau");
    cell_key[i] = pack(cx, cy, cz);
  }

  // Points grouped by cell: indices sorted by (key, index).
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (cell_key[a] != cell_key[b]) return cell_key[a] < cell_key[b];
    return a < b;
  });

  struct Range {
    int begin;
    int end;
  };
  std::unordered_map<std::uint64_t, Range> cells;
  cells.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && cell_key[order[j]] == cell_key[order[i]]) ++j;
    cells.emplace(cell_key[order[i]], Range{i, j});
    i = j;
  }

  // Half of the 26 neighbor offsets; each unordered cell pair is visited once.
  static constexpr std::int64_t k_fwd[13][3] = {
      {1, 0, 0},  {-1, 1, 0},  {0, 1, 0},  {1, 1, 0},  {-1, -1, 1}, {0, -1, 1}, {1, -1, 1},
      {-1, 0, 1}, {0, 0, 1},   {1, 0, 1},  {-1, 1, 1}, {0, 1, 1},   {1, 1, 1}};

  detail::UnionFind uf(cloud.size());
  const double tau2 = params.tau * params.tau;
  for (const auto& [key, range] : cells) {
    // within-cell pairs
    for (int a = range.begin; a < range.end; ++a)
      for (int b = a + 1; b < range.end; ++b) {
        const int i = order[a], j = order[b];
        if (detail::dist2(cloud.points[i], cloud.points[j]) <= tau2) uf.unite(i, j);
      }
    // pairs against forward neighbor cells
    for (const auto& d : k_fwd) {
      const std::uint64_t nkey = key + (static_cast<std::uint64_t>(d[0]) << 42) +
                                 (static_cast<std::uint64_t>(d[1]) << 21) +
                                 static_cast<std::uint64_t>(d[2]);
      auto it = cells.find(nkey);
      if (it == cells.end()) continue;
      const Range nr = it->second;
      for (int a = range.begin; a < range.end; ++a) {
        const int i = order[a];
        const Point3& pi = cloud.points[i];
        for (int b = nr.begin; b < nr.end; ++b) {
          const int j = order[b];
          if (detail::dist2(pi, cloud.points[j]) <= tau2) uf.unite(i, j);
        }
      }
    }
  }

  return detail::finalize_components(cloud, uf, params.min_points);
}

struct ClusterStats {
  std::size_t count = 0;
  std::vector<std::size_t> sizes;
  std::vector<double> fractions;  // of the whole cloud; dropped points excluded
};

inline ClusterStats cluster_stats(const std::vector<Cluster>& clusters,
                                  std::size_t total_points) {
  ClusterStats s;
  s.count = clusters.size();
  if (clusters.empty()) return s;
  if (total_points == 0) throw ValueError("total_points must be >= 1");
  for (const Cluster& c : clusters) {
    s.sizes.push_back(c.indices.size());
    s.fractions.push_back(static_cast<double>(c.indices.size()) /
                          static_cast<double>(total_points));
  }
  return s;
}

}  // namespace ddet
