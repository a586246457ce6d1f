// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "hpc/geometry.hpp"

namespace hpc {

/// Class ids used by the synthetic desk scenes.
enum SceneClass : int {
  kClassFloor = 0,
  kClassPole = 1,
  kClassSphere = 2,
  kClassClutter = 3,
};
inline constexpr int kSceneClassCount = 4;

/// Minimum gap (meters) kept between clutter points and structure surfaces,
/// so the clutter class stays geometrically separable from the others.
inline constexpr double kClutterClearance = 0.3;

/// Recipe for one synthetic scene. Primitive counts and per-primitive point
/// budgets fix the label histogram up to outlier injection; everything is
/// deterministic given the seed.
struct SceneSpec {
  std::uint64_t seed = 0;
  double extent = 10.0;  // scene footprint, [0, extent] in x and y

  int floor_count = 1;    // first floor spans the footprint at z = 0
  int pole_count = 4;     // vertical segments
  int sphere_count = 3;   // hollow blobs, surface sampled
  int clutter_count = 100;  // solid debris blobs in free space

  int floor_points = 12000;  // per floor
  int pole_points = 800;     // per pole
  int sphere_points = 1200;  // per sphere
  int clutter_points = 8;    // per clutter blob

  double clutter_radius = 0.15;   // debris blob radius; 0 collapses to lone points
  double noise_sigma = 0.01;      // isotropic Gaussian on primitive samples
  double outlier_fraction = 0.02;  // extra uniform points labeled clutter

  int total_primitive_points() const {
    return floor_count * floor_points + pole_count * pole_points +
           sphere_count * sphere_points + clutter_count * clutter_points;
  }
};

/// Labeled synthetic scene: floors, poles, sphere shells, clutter and
/// uniform outliers (labeled clutter). Points are emitted class by class in
/// generation order. Throws std::invalid_argument when every class count is
/// zero or any field is out of range.
PointCloud generate_scene(const SceneSpec& spec);

/// Scenes for seeds base_seed .. base_seed + count - 1. Disjoint seed ranges
/// give disjoint train/test splits.
std::vector<PointCloud> generate_dataset(SceneSpec spec, std::uint64_t base_seed, int count);

}  // namespace hpc
