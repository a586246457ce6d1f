// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/hausdorff.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "hpc/parallel.hpp"

namespace hpc {

const char* to_string(DistributiveFn f) {
  switch (f) {
    case DistributiveFn::Max:
      return "max";
    case DistributiveFn::Min:
      return "min";
    case DistributiveFn::Sum:
      return "sum";
  }
  return "unknown";
}

DistributiveFn distributive_fn_from_string(const std::string& name) {
  if (name == "max") return DistributiveFn::Max;
  if (name == "min") return DistributiveFn::Min;
  if (name == "sum") return DistributiveFn::Sum;
  throw std::invalid_argument("unknown distributive function '" + name + "'");
}

double sum_sorted(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

double directed_hausdorff(std::span<const Point3> a, std::span<const Point3> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("directed_hausdorff: both sets must be non-empty");
  }
  double worst = 0.0;
  for (const auto& pa : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pb : b) best = std::min(best, squared_distance(pa, pb));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

ShortestDistanceSet shortest_distance_set(std::span<const Point3> q,
                                          std::span<const Point3> g) {
  if (q.empty() || g.empty()) {
    throw std::invalid_argument("shortest_distance_set: both sets must be non-empty");
  }
  const int m = static_cast<int>(q.size());
  const int n = static_cast<int>(g.size());
  ShortestDistanceSet s;
  s.d_q.assign(m, std::numeric_limits<double>::infinity());
  s.d_q_argmin.assign(m, -1);
  s.d_g.assign(n, std::numeric_limits<double>::infinity());
  s.d_g_argmin.assign(n, -1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = squared_distance(q[i], g[j]);
      if (d < s.d_q[i]) {  // strict < keeps the lowest j on ties
        s.d_q[i] = d;
        s.d_q_argmin[i] = j;
      }
      if (d < s.d_g[j]) {
        s.d_g[j] = d;
        s.d_g_argmin[j] = i;
      }
    }
  }
  for (double& v : s.d_q) v = std::sqrt(v);
  for (double& v : s.d_g) v = std::sqrt(v);
  return s;
}

double hausdorff(std::span<const Point3> a, std::span<const Point3> b, DistributiveFn f) {
  const ShortestDistanceSet s = shortest_distance_set(a, b);
  switch (f) {
    case DistributiveFn::Max: {
      double v = 0.0;
      for (double d : s.d_q) v = std::max(v, d);
      for (double d : s.d_g) v = std::max(v, d);
      return v;
    }
    case DistributiveFn::Min: {
      double v = std::numeric_limits<double>::infinity();
      for (double d : s.d_q) v = std::min(v, d);
      for (double d : s.d_g) v = std::min(v, d);
      return v;
    }
    case DistributiveFn::Sum: {
      std::vector<double> all;
      all.reserve(s.d_q.size() + s.d_g.size());
      all.insert(all.end(), s.d_q.begin(), s.d_q.end());
      all.insert(all.end(), s.d_g.begin(), s.d_g.end());
      return sum_sorted(std::move(all));
    }
  }
  throw std::invalid_argument("hausdorff: unknown distributive function");
}

const double* ShortestDistanceMatrix::at(int row_q, int col_q) const {
  const Entry probe{row_q, col_q, 0.0};
  auto it = std::lower_bound(entries.begin(), entries.end(), probe,
                             [](const Entry& a, const Entry& b) {
                               return a.row != b.row ? a.row < b.row : a.col < b.col;
                             });
  if (it != entries.end() && it->row == row_q && it->col == col_q) return &it->value;
  return nullptr;
}

ShortestDistanceMatrix build_dmin(const ShortestDistanceSet& s, int n, int m, double radius) {
  if (static_cast<int>(s.d_q.size()) != m || static_cast<int>(s.d_g.size()) != n) {
    throw std::invalid_argument("build_dmin: set sizes disagree with n/m");
  }
  using Entry = ShortestDistanceMatrix::Entry;
  ShortestDistanceMatrix d;
  d.rows = n;
  d.cols = m;
  d.radius = radius;
  d.entries.reserve(static_cast<std::size_t>(n) + static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) d.entries.push_back({s.d_q_argmin[i], i, s.d_q[i]});
  for (int j = 0; j < n; ++j) d.entries.push_back({j, s.d_g_argmin[j], s.d_g[j]});
  std::sort(d.entries.begin(), d.entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  // A pair realizing both d_q[i] and d_g[j] appears twice with equal values.
  d.entries.erase(std::unique(d.entries.begin(), d.entries.end(),
                              [](const Entry& a, const Entry& b) {
                                return a.row == b.row && a.col == b.col;
                              }),
                  d.entries.end());
  return d;
}

ShortestDistanceMatrix dense_distance_matrix(std::span<const Point3> q,
                                             std::span<const Point3> g, double radius) {
  if (q.empty() || g.empty()) {
    throw std::invalid_argument("dense_distance_matrix: both sets must be non-empty");
  }
  ShortestDistanceMatrix d;
  d.rows = static_cast<int>(g.size());
  d.cols = static_cast<int>(q.size());
  d.radius = radius;
  d.entries.reserve(static_cast<std::size_t>(d.rows) * d.cols);
  for (int j = 0; j < d.rows; ++j)
    for (int i = 0; i < d.cols; ++i) d.entries.push_back({j, i, distance(g[j], q[i])});
  return d;
}

ShortestDistanceMatrix normalize_similarity(const ShortestDistanceMatrix& d) {
  if (!(d.radius > 0.0)) {
    throw std::invalid_argument("normalize_similarity: matrix radius must be positive");
  }
  ShortestDistanceMatrix out = d;
  for (auto& e : out.entries) {
    e.value = std::clamp(1.0 - e.value / d.radius, -1.0, 1.0);
  }
  return out;
}

std::vector<double> response_map(const PointCloud& cloud, const KernelPrior& kernel, double r,
                                 DistributiveFn f, int threads) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("response_map: radius must be positive and finite");
  }
  if (kernel.points.empty()) throw std::invalid_argument("response_map: empty kernel");
  validate_cloud(cloud);
  std::vector<double> out(cloud.size(), 1.0);
  if (cloud.points.empty()) return out;

  const std::vector<Point3> scaled = scale_kernel(kernel, r);
  const int n = static_cast<int>(scaled.size());
  const SpatialHashGrid grid(cloud.points, r);

  parallel_for_items(cloud.size(), threads, [&](std::size_t p) {
    const Point3 center = cloud.points[p];
    const std::vector<int> idx = grid.radius_query(center, r);
    if (idx.size() < 2) return;  // isolated: nothing but the point itself
    std::vector<Point3> offsets;
    offsets.reserve(idx.size());
    for (int i : idx) offsets.push_back(cloud.points[i] - center);
    const double h = hausdorff(offsets, scaled, f);
    const int m = static_cast<int>(offsets.size());
    out[p] = f == DistributiveFn::Sum ? h / (r * static_cast<double>(m + n)) : h / r;
  });
  return out;
}

}  // namespace hpc
