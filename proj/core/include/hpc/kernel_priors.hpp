// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hpc/geometry.hpp"

namespace hpc {

enum class KernelShape { CenterPoint = 0, Line = 1, Plane = 2, Sphere = 3 };

const char* to_string(KernelShape shape);
KernelShape kernel_shape_from_string(const std::string& name);

/// Geometric kernel prior: n points inside the closed unit ball.
struct KernelPrior {
  KernelShape shape = KernelShape::CenterPoint;
  std::vector<Point3> points;

  int size() const { return static_cast<int>(points.size()); }
};

/// Builds the canonical prior for a shape: dense deterministic parametric
/// sampling of the primitive (oversample_factor * n candidates), reduced to n
/// points by farthest point sampling seeded at the candidate farthest from
/// the candidate centroid.
///
///   CenterPoint: the origin; n is forced to 1.
///   Line:        segment (0,0,-1) .. (0,0,1).
///   Plane:       unit disk in z = 0.
///   Sphere:      unit sphere surface.
///
/// Deterministic given (shape, n, oversample_factor).
KernelPrior generate_kernel(KernelShape shape, int n, int oversample_factor = 64);

/// Kernel points scaled to a ball of radius r. r must be > 0.
std::vector<Point3> scale_kernel(const KernelPrior& kernel, double r);

/// Measured covering radius of the prior over a dense reference sampling of
/// its primitive: max over reference points of the distance to the nearest
/// kernel point. Zero for CenterPoint.
double kernel_covering_radius(const KernelPrior& kernel, int reference_samples = 20000);

}  // namespace hpc
