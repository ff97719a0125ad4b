#pragma once

#include <vector>

#include "tdcr/errors.hpp"
#include "tdcr/geometry.hpp"
#include "tdcr/random.hpp"

namespace tdcr {

/// Farthest-point sampling indices. The first point is a seeded uniform
/// draw; each following point maximizes the minimum distance to the
/// selected set, ties broken by lowest index.
inline std::vector<std::size_t> fps_indices(const PointCloud& cloud,
                                            std::size_t m,
                                            std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (m == 0) throw InvalidInput("fps_downsample: m must be at least 1");
  if (m > n)
    throw InvalidInput("fps_downsample: m=" + std::to_string(m) +
                       " exceeds cloud size " + std::to_string(n));
  Rng rng(seed);
  std::vector<std::size_t> selected;
  selected.reserve(m);
  std::vector<char> is_selected(n, 0);
  std::vector<double> min_d2(n);

  const std::size_t first = rng.uniform_index(n);
  selected.push_back(first);
  is_selected[first] = 1;
  for (std::size_t j = 0; j < n; ++j)
    min_d2[j] = (cloud.points[j] - cloud.points[first]).squaredNorm();

  while (selected.size() < m) {
    std::size_t best = n;
    double best_d2 = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (is_selected[j]) continue;
      if (min_d2[j] > best_d2) {
        best_d2 = min_d2[j];
        best = j;
      }
    }
    selected.push_back(best);
    is_selected[best] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (is_selected[j]) continue;
      const double d2 = (cloud.points[j] - cloud.points[best]).squaredNorm();
      if (d2 < min_d2[j]) min_d2[j] = d2;
    }
  }
  return selected;
}

/// Downsample by farthest-point sampling; original coordinates and arclen
/// labels are preserved, in selection order.
inline PointCloud fps_downsample(const PointCloud& cloud, std::size_t m,
                                 std::uint64_t seed) {
  const std::vector<std::size_t> idx = fps_indices(cloud, m, seed);
  PointCloud out;
  out.points.reserve(m);
  for (std::size_t i : idx) out.points.push_back(cloud.points[i]);
  if (cloud.has_arclen()) {
    out.arclen.reserve(m);
    for (std::size_t i : idx) out.arclen.push_back(cloud.arclen[i]);
  }
  return out;
}

}  // namespace tdcr
