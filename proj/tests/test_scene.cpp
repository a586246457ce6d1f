// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "doctest.h"
#include "hpc/scene.hpp"
#include "test_support.hpp"

using namespace hpc;

namespace {

SceneSpec small_spec(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.extent = 8.0;
  spec.floor_count = 1;
  spec.floor_points = 900;
  spec.pole_count = 2;
  spec.pole_points = 150;
  spec.sphere_count = 1;
  spec.sphere_points = 200;
  spec.clutter_count = 12;
  spec.clutter_points = 10;
  return spec;
}

std::array<int, kSceneClassCount> histogram(const PointCloud& cloud) {
  std::array<int, kSceneClassCount> h{};
  for (int label : cloud.labels) {
    REQUIRE(label >= 0);
    REQUIRE(label < kSceneClassCount);
    ++h[label];
  }
  return h;
}

}  // namespace

TEST_CASE("noiseless single floor lies exactly at z = 0") {
  SceneSpec spec = small_spec(11);
  spec.noise_sigma = 0.0;
  spec.outlier_fraction = 0.0;
  spec.pole_count = 0;
  spec.sphere_count = 0;
  spec.clutter_count = 0;
  const PointCloud cloud = generate_scene(spec);
  REQUIRE(cloud.size() == 900);
  for (const Point3& p : cloud.points) {
    CHECK(p.z == 0.0);
    CHECK(p.x >= 0.0);
    CHECK(p.x <= spec.extent);
  }
  for (int label : cloud.labels) CHECK(label == kClassFloor);
}

TEST_CASE("generation is deterministic per seed") {
  const PointCloud a = generate_scene(small_spec(3));
  const PointCloud b = generate_scene(small_spec(3));
  const PointCloud c = generate_scene(small_spec(4));
  REQUIRE(a.size() == b.size());
  CHECK(a.labels == b.labels);
  bool identical = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical = identical && a.points[i].x == b.points[i].x && a.points[i].y == b.points[i].y &&
                a.points[i].z == b.points[i].z;
  }
  CHECK(identical);
  CHECK(c.points[0].norm() != a.points[0].norm());
}

TEST_CASE("label histogram matches the per-class budgets") {
  SceneSpec spec = small_spec(7);
  spec.outlier_fraction = 0.03;
  const PointCloud cloud = generate_scene(spec);

  const int base = spec.total_primitive_points();
  const int outliers = static_cast<int>(std::llround(spec.outlier_fraction * base));
  REQUIRE(static_cast<int>(cloud.size()) == base + outliers);

  const auto h = histogram(cloud);
  CHECK(h[kClassFloor] == spec.floor_count * spec.floor_points);
  CHECK(h[kClassPole] == spec.pole_count * spec.pole_points);
  CHECK(h[kClassSphere] == spec.sphere_count * spec.sphere_points);
  CHECK(h[kClassClutter] == spec.clutter_count * spec.clutter_points + outliers);

  // No per-point features are attached; inputs get constant features later.
  CHECK(!cloud.has_features());
}

TEST_CASE("scene spec validation") {
  SceneSpec spec = small_spec(0);

  SceneSpec bad = spec;
  bad.floor_count = 0;
  bad.pole_count = 0;
  bad.sphere_count = 0;
  bad.clutter_count = 0;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);

  bad = spec;
  bad.pole_count = -1;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);

  bad = spec;
  bad.floor_points = -5;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);

  bad = spec;
  bad.extent = 0.0;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);

  bad = spec;
  bad.clutter_radius = -0.1;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);

  bad = spec;
  bad.noise_sigma = -1e-6;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);

  bad = spec;
  bad.outlier_fraction = 1.5;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);
  bad.outlier_fraction = -0.01;
  CHECK_THROWS_AS(generate_scene(bad), std::invalid_argument);
}

TEST_CASE("noiseless poles have zero xy-spread") {
  SceneSpec spec = small_spec(21);
  spec.noise_sigma = 0.0;
  spec.outlier_fraction = 0.0;
  const PointCloud cloud = generate_scene(spec);

  // Poles are emitted as contiguous runs right after the floors.
  const int start = spec.floor_count * spec.floor_points;
  for (int p = 0; p < spec.pole_count; ++p) {
    const int lo = start + p * spec.pole_points;
    const Point3& first = cloud.points[lo];
    for (int i = lo; i < lo + spec.pole_points; ++i) {
      REQUIRE(cloud.labels[i] == kClassPole);
      CHECK(cloud.points[i].x == first.x);
      CHECK(cloud.points[i].y == first.y);
      CHECK(cloud.points[i].z >= 0.0);
    }
  }
}

TEST_CASE("noiseless sphere points lie on a common shell") {
  SceneSpec spec = small_spec(22);
  spec.noise_sigma = 0.0;
  spec.outlier_fraction = 0.0;
  const PointCloud cloud = generate_scene(spec);

  const int lo = spec.floor_count * spec.floor_points + spec.pole_count * spec.pole_points;
  const int hi = lo + spec.sphere_points;

  // Algebraic sphere fit: |p|^2 = 2 p . c + (r^2 - |c|^2) is linear in c and
  // the offset, so a least-squares solve recovers the shell exactly.
  Eigen::MatrixXd a(spec.sphere_points, 4);
  Eigen::VectorXd rhs(spec.sphere_points);
  for (int i = lo; i < hi; ++i) {
    REQUIRE(cloud.labels[i] == kClassSphere);
    const Point3& p = cloud.points[i];
    a.row(i - lo) << 2 * p.x, 2 * p.y, 2 * p.z, 1.0;
    rhs(i - lo) = p.x * p.x + p.y * p.y + p.z * p.z;
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
  const Point3 center{sol(0), sol(1), sol(2)};
  const double radius = std::sqrt(sol(3) + center.norm() * center.norm());
  CHECK(radius >= 0.25);
  CHECK(radius <= 0.5);
  for (int i = lo; i < hi; ++i) {
    CHECK(std::abs((cloud.points[i] - center).norm() - radius) <= 1e-9);
  }
}

TEST_CASE("clutter keeps its clearance from structure surfaces") {
  SceneSpec spec = small_spec(23);
  spec.noise_sigma = 0.0;
  spec.outlier_fraction = 0.0;
  const PointCloud cloud = generate_scene(spec);

  double min_gap = 1e300;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.labels[i] != kClassClutter) continue;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (cloud.labels[j] == kClassClutter) continue;
      min_gap = std::min(min_gap, (cloud.points[i] - cloud.points[j]).norm());
    }
  }
  // Blob samples stay within clutter_radius of a center that keeps
  // kClutterClearance + clutter_radius away from every surface.
  CHECK(min_gap >= kClutterClearance - 1e-9);
}

TEST_CASE("datasets enumerate seeds and reject negative counts") {
  SceneSpec spec = small_spec(0);
  const auto scenes = generate_dataset(spec, 40, 3);
  REQUIRE(scenes.size() == 3);
  for (int i = 0; i < 3; ++i) {
    spec.seed = 40 + i;
    const PointCloud direct = generate_scene(spec);
    REQUIRE(scenes[i].size() == direct.size());
    CHECK(scenes[i].points[0].x == direct.points[0].x);
    CHECK(scenes[i].labels == direct.labels);
  }
  // Adjacent seed ranges stay disjoint: different seeds, different clouds.
  CHECK(scenes[0].points[0].x != scenes[1].points[0].x);

  CHECK(generate_dataset(spec, 0, 0).empty());
  CHECK_THROWS_AS(generate_dataset(spec, 0, -1), std::invalid_argument);
}
