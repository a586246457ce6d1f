// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/geometry.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

namespace hpc {

void validate_cloud(const PointCloud& cloud) {
  for (const auto& p : cloud.points) {
    if (!p.finite()) throw std::invalid_argument("point cloud contains non-finite coordinates");
  }
  if (cloud.has_features() &&
      cloud.features.rows() != static_cast<Eigen::Index>(cloud.size())) {
    throw std::invalid_argument("feature rows do not match point count");
  }
  if (cloud.has_labels() && cloud.labels.size() != cloud.size()) {
    throw std::invalid_argument("label count does not match point count");
  }
}

SpatialHashGrid::SpatialHashGrid(const std::vector<Point3>& points, double cell)
    : points_(&points), cell_(cell) {
  if (!(cell > 0.0) || !std::isfinite(cell)) {
    throw std::invalid_argument("grid cell size must be positive and finite");
  }
  cells_.reserve(points.size());
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const CellKey k = key_of(points[i]);
    cells_[k].push_back(i);  // insertion keeps indices ascending per cell
    if (i == 0) {
      key_lo_ = key_hi_ = k;
    } else {
      key_lo_ = {std::min(key_lo_.x, k.x), std::min(key_lo_.y, k.y), std::min(key_lo_.z, k.z)};
      key_hi_ = {std::max(key_hi_.x, k.x), std::max(key_hi_.y, k.y), std::max(key_hi_.z, k.z)};
    }
  }
}

SpatialHashGrid::CellKey SpatialHashGrid::key_of(const Point3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_)),
          static_cast<std::int64_t>(std::floor(p.y / cell_)),
          static_cast<std::int64_t>(std::floor(p.z / cell_))};
}

std::vector<int> SpatialHashGrid::radius_query(const Point3& center, double r) const {
  std::vector<int> out;
  if (r < 0.0) return out;
  const double rr = r * r;
  // One extra cell per side guards against rounding at ball/cell boundaries.
  const std::int64_t x0 = static_cast<std::int64_t>(std::floor((center.x - r) / cell_)) - 1;
  const std::int64_t x1 = static_cast<std::int64_t>(std::floor((center.x + r) / cell_)) + 1;
  const std::int64_t y0 = static_cast<std::int64_t>(std::floor((center.y - r) / cell_)) - 1;
  const std::int64_t y1 = static_cast<std::int64_t>(std::floor((center.y + r) / cell_)) + 1;
  const std::int64_t z0 = static_cast<std::int64_t>(std::floor((center.z - r) / cell_)) - 1;
  const std::int64_t z1 = static_cast<std::int64_t>(std::floor((center.z + r) / cell_)) + 1;
  for (std::int64_t cx = x0; cx <= x1; ++cx)
    for (std::int64_t cy = y0; cy <= y1; ++cy)
      for (std::int64_t cz = z0; cz <= z1; ++cz) {
        auto it = cells_.find({cx, cy, cz});
        if (it == cells_.end()) continue;
        for (int idx : it->second) {
          if (squared_distance((*points_)[idx], center) <= rr) out.push_back(idx);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

int SpatialHashGrid::nearest(const Point3& center) const {
  if (points_->empty()) return -1;
  const CellKey ck = key_of(center);
  // Farthest ring that can contain an occupied cell.
  const std::int64_t max_ring = std::max(
      {std::llabs(key_lo_.x - ck.x), std::llabs(key_hi_.x - ck.x), std::llabs(key_lo_.y - ck.y),
       std::llabs(key_hi_.y - ck.y), std::llabs(key_lo_.z - ck.z), std::llabs(key_hi_.z - ck.z)});
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  // Expanding Chebyshev shells. A point in ring R is at least (R-1)*cell from
  // the center, so once best_sq <= (ring*cell)^2 no farther ring can win.
  for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
    for (std::int64_t cx = ck.x - ring; cx <= ck.x + ring; ++cx)
      for (std::int64_t cy = ck.y - ring; cy <= ck.y + ring; ++cy)
        for (std::int64_t cz = ck.z - ring; cz <= ck.z + ring; ++cz) {
          if (std::max({std::llabs(cx - ck.x), std::llabs(cy - ck.y), std::llabs(cz - ck.z)}) !=
              ring)
            continue;  // shell only
          auto it = cells_.find({cx, cy, cz});
          if (it == cells_.end()) continue;
          for (int idx : it->second) {
            const double d = squared_distance((*points_)[idx], center);
            if (d < best_sq || (d == best_sq && idx < best)) {
              best_sq = d;
              best = idx;
            }
          }
        }
    if (best >= 0) {
      const double safe = static_cast<double>(ring) * cell_;
      if (safe * safe >= best_sq) return best;
    }
  }
  return best;
}

Neighborhood radius_neighbors(const PointCloud& cloud, const Point3& center, double r) {
  if (!center.finite() || !std::isfinite(r)) {
    throw std::invalid_argument("radius_neighbors: center and radius must be finite");
  }
  if (r < 0.0) throw std::invalid_argument("radius_neighbors: radius must be non-negative");
  validate_cloud(cloud);
  Neighborhood nb;
  nb.center = center;
  nb.radius = r;
  if (cloud.points.empty()) return nb;
  const double cell = r > 0.0 ? r : 1.0;
  SpatialHashGrid grid(cloud.points, cell);
  nb.indices = grid.radius_query(center, r);
  return nb;
}

std::vector<int> farthest_point_sample(const PointCloud& cloud, int k, int seed_index) {
  const int n = static_cast<int>(cloud.size());
  if (k < 1 || k > n) throw std::invalid_argument("farthest_point_sample: k out of range");
  if (seed_index < 0 || seed_index >= n) {
    throw std::invalid_argument("farthest_point_sample: seed index out of range");
  }
  std::vector<int> picked;
  picked.reserve(k);
  std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
  int current = seed_index;
  picked.push_back(current);
  for (int step = 1; step < k; ++step) {
    int far_idx = -1;
    double far_sq = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = squared_distance(cloud.points[i], cloud.points[current]);
      if (d < min_sq[i]) min_sq[i] = d;
      if (min_sq[i] > far_sq) {  // strict > keeps the lowest index on ties
        far_sq = min_sq[i];
        far_idx = i;
      }
    }
    current = far_idx;
    picked.push_back(current);
  }
  return picked;
}

std::vector<int> farthest_point_sample(const PointCloud& cloud, int k) {
  if (cloud.points.empty()) throw std::invalid_argument("farthest_point_sample: empty cloud");
  Point3 centroid{0, 0, 0};
  for (const auto& p : cloud.points) centroid += p;
  const double inv = 1.0 / static_cast<double>(cloud.size());
  centroid = centroid * inv;
  int seed = 0;
  double best = -1.0;
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    const double d = squared_distance(cloud.points[i], centroid);
    if (d > best) {
      best = d;
      seed = i;
    }
  }
  return farthest_point_sample(cloud, k, seed);
}

GridSubsampleResult grid_subsample_detail(const PointCloud& cloud, double cell) {
  if (!(cell > 0.0) || !std::isfinite(cell)) {
    throw std::invalid_argument("grid_subsample: cell size must be positive");
  }
  validate_cloud(cloud);
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  // std::map gives the voxel-key ordering of the output directly.
  std::map<Key, std::vector<int>> voxels;
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    const auto& p = cloud.points[i];
    Key key{static_cast<std::int64_t>(std::floor(p.x / cell)),
            static_cast<std::int64_t>(std::floor(p.y / cell)),
            static_cast<std::int64_t>(std::floor(p.z / cell))};
    voxels[key].push_back(i);
  }

  GridSubsampleResult res;
  res.cloud.feature_names = cloud.feature_names;
  const int c = cloud.has_features() ? static_cast<int>(cloud.features.cols()) : 0;
  if (c > 0) res.cloud.features.resize(static_cast<Eigen::Index>(voxels.size()), c);
  res.cloud.points.reserve(voxels.size());
  res.sources.reserve(voxels.size());

  Eigen::Index row = 0;
  for (auto& [key, members] : voxels) {
    Point3 centroid{0, 0, 0};
    for (int idx : members) centroid += cloud.points[idx];
    const double inv = 1.0 / static_cast<double>(members.size());
    res.cloud.points.push_back(centroid * inv);

    if (c > 0) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(c);
      for (int idx : members) acc += cloud.features.row(idx);
      res.cloud.features.row(row) = acc * inv;
    }
    if (cloud.has_labels()) {
      std::map<int, int> votes;  // ordered: ties resolve to the smallest class id
      for (int idx : members) votes[cloud.labels[idx]]++;
      int win_label = 0, win_count = -1;
      for (const auto& [label, count] : votes) {
        if (count > win_count) {
          win_count = count;
          win_label = label;
        }
      }
      res.cloud.labels.push_back(win_label);
    }
    res.sources.push_back(std::move(members));
    ++row;
  }
  return res;
}

PointCloud grid_subsample(const PointCloud& cloud, double cell) {
  return grid_subsample_detail(cloud, cell).cloud;
}

}  // namespace hpc
