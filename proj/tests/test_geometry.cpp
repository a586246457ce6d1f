// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "doctest.h"
#include "hpc/geometry.hpp"
#include "test_support.hpp"

using namespace hpc;

TEST_CASE("radius_neighbors basic membership") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {0.5, 0, 0}, {2, 0, 0}};

  Neighborhood n = radius_neighbors(cloud, {0, 0, 0}, 1.0);
  CHECK(n.indices == std::vector<int>{0, 1});
  CHECK(n.radius == 1.0);

  // r = 0 keeps exact coincidences only (closed ball boundary).
  CHECK(radius_neighbors(cloud, {0.5, 0, 0}, 0.0).indices == std::vector<int>{1});

  // A radius beyond the diameter returns everything.
  CHECK(radius_neighbors(cloud, {0, 0, 0}, 10.0).indices == std::vector<int>{0, 1, 2});
}

TEST_CASE("radius_neighbors rejects bad inputs") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(radius_neighbors(cloud, {nan, 0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(radius_neighbors(cloud, {0, 0, 0}, nan), std::invalid_argument);
  CHECK_THROWS_AS(radius_neighbors(cloud, {0, 0, 0}, -1.0), std::invalid_argument);
}

TEST_CASE("radius_neighbors matches a brute-force scan on random clouds") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = rng.uniform_int(1, 300);
    PointCloud cloud = hpct::random_cloud(rng, n);
    // Duplicates exercise the coincident-point path.
    if (n > 4) cloud.points[1] = cloud.points[0];
    const Point3 center{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double r = rng.uniform(0.0, 2.5);
    const Neighborhood got = radius_neighbors(cloud, center, r);
    CHECK(got.indices == hpct::brute_radius_scan(cloud, center, r));
    CHECK(std::is_sorted(got.indices.begin(), got.indices.end()));
  }
}

TEST_CASE("spatial grid nearest matches brute force with low-index ties") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    PointCloud cloud = hpct::random_cloud(rng, rng.uniform_int(1, 200));
    SpatialHashGrid grid(cloud.points, 0.7);
    const Point3 q{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5)};
    int best = 0;
    for (std::size_t i = 1; i < cloud.points.size(); ++i) {
      if (squared_distance(cloud.points[i], q) < squared_distance(cloud.points[best], q)) {
        best = static_cast<int>(i);
      }
    }
    CHECK(grid.nearest(q) == best);
  }
  SpatialHashGrid empty(std::vector<Point3>{}, 1.0);
  CHECK(empty.nearest({0, 0, 0}) == -1);
}

TEST_CASE("farthest point sampling hand cases") {
  PointCloud line;
  line.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK(farthest_point_sample(line, 2, 0) == std::vector<int>{0, 3});

  PointCloud square;
  square.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  CHECK(farthest_point_sample(square, 2, 0) == std::vector<int>{0, 3});

  // k = |cloud| exhausts the cloud.
  std::vector<int> all = farthest_point_sample(line, 4, 2);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<int>{0, 1, 2, 3});

  CHECK_THROWS_AS(farthest_point_sample(line, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(farthest_point_sample(line, 1, 7), std::invalid_argument);
}

TEST_CASE("farthest point sampling is deterministic, distinct, and greedy") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    PointCloud cloud = hpct::random_cloud(rng, rng.uniform_int(3, 120));
    const int k = rng.uniform_int(2, static_cast<int>(cloud.size()));
    const std::vector<int> picks = farthest_point_sample(cloud, k, 0);
    CHECK(picks == farthest_point_sample(cloud, k, 0));
    CHECK(std::set<int>(picks.begin(), picks.end()).size() == picks.size());

    // Each pick maximizes the min distance to the chosen prefix, lowest index
    // on ties.
    for (int step = 1; step < k; ++step) {
      auto min_dist = [&](int idx) {
        double best = std::numeric_limits<double>::infinity();
        for (int s = 0; s < step; ++s) {
          best = std::min(best, distance(cloud.points[idx], cloud.points[picks[s]]));
        }
        return best;
      };
      const double chosen = min_dist(picks[step]);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double d = min_dist(static_cast<int>(i));
        CHECK(d <= chosen + 1e-15);
        if (d == chosen && static_cast<int>(i) < picks[step]) {
          // An equal candidate with a lower index must itself be a pick.
          CHECK(std::find(picks.begin(), picks.begin() + step, static_cast<int>(i)) !=
                picks.begin() + step);
        }
      }
    }
  }
}

TEST_CASE("fps min pairwise distance never grows with k") {
  Rng rng(14);
  PointCloud cloud = hpct::random_cloud(rng, 80);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= 30; ++k) {
    const std::vector<int> picks = farthest_point_sample(cloud, k, 0);
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < picks.size(); ++a) {
      for (std::size_t b = a + 1; b < picks.size(); ++b) {
        closest = std::min(closest, distance(cloud.points[picks[a]], cloud.points[picks[b]]));
      }
    }
    CHECK(closest <= prev + 1e-15);
    prev = closest;
  }
}

TEST_CASE("grid subsample merges cells into centroids") {
  PointCloud cloud;
  cloud.points = {{0.1, 0.1, 0.1}, {0.3, 0.1, 0.1}};
  PointCloud out = grid_subsample(cloud, 1.0);
  REQUIRE(out.size() == 1);
  CHECK(out.points[0].x == doctest::Approx(0.2));
  CHECK(out.points[0].y == doctest::Approx(0.1));
  CHECK(!out.has_features());
}

TEST_CASE("grid subsample keeps well-separated points") {
  Rng rng(15);
  PointCloud cloud;
  const double cell = 0.25;
  // Lattice spacing > cell*sqrt(3) guarantees one point per voxel.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      cloud.points.push_back({i * 0.5 + rng.uniform(0, 0.01), j * 0.5, 0.0});
    }
  }
  PointCloud out = grid_subsample(cloud, cell);
  REQUIRE(out.size() == cloud.size());
  auto key = [](const Point3& p) { return std::tuple(p.x, p.y, p.z); };
  std::vector<std::tuple<double, double, double>> a, b;
  for (const auto& p : cloud.points) a.push_back(key(p));
  for (const auto& p : out.points) b.push_back(key(p));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("grid subsample averages features and majority-votes labels") {
  PointCloud cloud;
  cloud.points = {{0.1, 0, 0}, {0.2, 0, 0}, {0.3, 0, 0}, {5, 5, 5}};
  cloud.features = Eigen::MatrixXd(4, 2);
  cloud.features << 1, 10, 2, 20, 3, 30, 7, 70;
  cloud.labels = {2, 1, 1, 0};

  PointCloud out = grid_subsample(cloud, 1.0);
  REQUIRE(out.size() == 2);
  // Voxel key order puts the origin cell first.
  CHECK(out.features(0, 0) == doctest::Approx(2.0));
  CHECK(out.features(0, 1) == doctest::Approx(20.0));
  CHECK(out.labels[0] == 1);
  CHECK(out.labels[1] == 0);

  // Label tie resolves to the smaller class id.
  PointCloud tie;
  tie.points = {{0, 0, 0}, {0.1, 0, 0}};
  tie.labels = {3, 1};
  CHECK(grid_subsample(tie, 1.0).labels[0] == 1);

  CHECK_THROWS_AS(grid_subsample(cloud, 0.0), std::invalid_argument);
}

TEST_CASE("grid subsample bounds and provenance") {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud cloud = hpct::random_cloud(rng, rng.uniform_int(1, 300));
    const double cell = rng.uniform(0.2, 1.5);
    GridSubsampleResult detail = grid_subsample_detail(cloud, cell);
    CHECK(detail.cloud.size() <= cloud.size());

    std::vector<int> seen;
    for (std::size_t v = 0; v < detail.sources.size(); ++v) {
      const auto& members = detail.sources[v];
      REQUIRE(!members.empty());
      CHECK(std::is_sorted(members.begin(), members.end()));
      // Output point stays inside the bounding box of its members.
      double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
      for (int idx : members) {
        const Point3& p = cloud.points[idx];
        const double c[3] = {p.x, p.y, p.z};
        for (int d = 0; d < 3; ++d) {
          lo[d] = std::min(lo[d], c[d]);
          hi[d] = std::max(hi[d], c[d]);
        }
        seen.push_back(idx);
      }
      const Point3& o = detail.cloud.points[v];
      const double oc[3] = {o.x, o.y, o.z};
      for (int d = 0; d < 3; ++d) {
        CHECK(oc[d] >= lo[d] - 1e-12);
        CHECK(oc[d] <= hi[d] + 1e-12);
      }
    }
    // Provenance partitions the input.
    std::sort(seen.begin(), seen.end());
    CHECK(seen.size() == cloud.size());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }
}

TEST_CASE("validate_cloud flags misaligned metadata") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 1, 1}};
  CHECK_NOTHROW(validate_cloud(cloud));
  cloud.labels = {1};
  CHECK_THROWS_AS(validate_cloud(cloud), std::invalid_argument);
  cloud.labels = {1, 2};
  cloud.features = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(validate_cloud(cloud), std::invalid_argument);
  cloud.features = Eigen::MatrixXd::Zero(2, 1);
  CHECK_NOTHROW(validate_cloud(cloud));
  cloud.points[0].x = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate_cloud(cloud), std::invalid_argument);
}
