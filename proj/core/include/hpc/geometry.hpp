// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace hpc {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3() = default;
  Point3(double px, double py, double pz) : x(px), y(py), z(pz) {}

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Point3& operator+=(const Point3& o) { x += o.x; y += o.y; z += o.z; return *this; }

  double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}
inline double distance(const Point3& a, const Point3& b) {
  return std::sqrt(squared_distance(a, b));
}

/// Point set with optional per-point features (rows aligned with points) and
/// optional integer labels (-1 = unlabeled).
struct PointCloud {
  std::vector<Point3> points;
  Eigen::MatrixXd features;                // size() x c, or 0 x 0 when absent
  std::vector<std::string> feature_names;  // aligned with feature columns
  std::vector<int> labels;                 // empty or size()

  std::size_t size() const { return points.size(); }
  bool has_features() const { return features.size() > 0; }
  bool has_labels() const { return !labels.empty(); }
};

/// Throws std::invalid_argument if the row/label counts disagree with points
/// or any coordinate is non-finite.
void validate_cloud(const PointCloud& cloud);

/// Result of a radius query: indices into the queried cloud, ascending.
struct Neighborhood {
  Point3 center;
  std::vector<int> indices;
  double radius = 0.0;

  int size() const { return static_cast<int>(indices.size()); }
};

/// Uniform hash grid over a fixed point set. Cell size should match the query
/// radius for single-ring lookups; queries with any r work regardless.
class SpatialHashGrid {
 public:
  SpatialHashGrid(const std::vector<Point3>& points, double cell);

  /// Indices of points with distance(center, p) <= r, ascending. Closed ball.
  std::vector<int> radius_query(const Point3& center, double r) const;

  /// Index of the nearest point (ties broken toward the lowest index), or -1
  /// for an empty grid.
  int nearest(const Point3& center) const;

  double cell() const { return cell_; }

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
      // FNV-style mix of the three lattice coordinates.
      std::uint64_t h = 1469598103934665603ull;
      for (std::uint64_t v : {static_cast<std::uint64_t>(k.x), static_cast<std::uint64_t>(k.y),
                              static_cast<std::uint64_t>(k.z)}) {
        h ^= v;
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };

  CellKey key_of(const Point3& p) const;

  const std::vector<Point3>* points_;
  double cell_;
  CellKey key_lo_{0, 0, 0}, key_hi_{0, 0, 0};  // occupied-cell bounds
  std::unordered_map<CellKey, std::vector<int>, CellKeyHash> cells_;
};

/// All cloud points inside the closed ball of radius r around center.
/// r = 0 returns exact coincidences. Throws std::invalid_argument for r < 0
/// or a non-finite center/radius.
Neighborhood radius_neighbors(const PointCloud& cloud, const Point3& center, double r);

/// Farthest point sampling. Starts at seed_index, then greedily adds the
/// point maximizing the distance to the chosen set; ties go to the lowest
/// index. Returns k indices in selection order.
std::vector<int> farthest_point_sample(const PointCloud& cloud, int k, int seed_index);

/// FPS seeded at the point farthest from the cloud centroid.
std::vector<int> farthest_point_sample(const PointCloud& cloud, int k);

/// grid_subsample with per-voxel provenance, used where gradients or label
/// pooling must flow back to source points.
struct GridSubsampleResult {
  PointCloud cloud;
  std::vector<std::vector<int>> sources;  // per output point: input indices, ascending
};

/// Voxel-grid downsample: one point per occupied cell at the centroid of its
/// members; features averaged; labels by majority vote (ties -> smallest
/// class id). Output ordered by voxel key (lexicographic). cell must be > 0.
PointCloud grid_subsample(const PointCloud& cloud, double cell);

GridSubsampleResult grid_subsample_detail(const PointCloud& cloud, double cell);

}  // namespace hpc
