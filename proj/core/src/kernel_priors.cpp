// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/kernel_priors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hpc {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi * (3 - sqrt(5))

// Evenly spaced samples on the z-axis segment; odd count so t = 0 is hit
// exactly and FPS lands on the true midpoint.
std::vector<Point3> sample_line(int count) {
  if (count % 2 == 0) ++count;
  std::vector<Point3> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(count - 1);
    pts.push_back({0.0, 0.0, t});
  }
  return pts;
}

// Sunflower layout on the unit disk.
std::vector<Point3> sample_disk(int count) {
  std::vector<Point3> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double r = std::sqrt((static_cast<double>(i) + 0.5) / static_cast<double>(count));
    const double a = kGoldenAngle * static_cast<double>(i);
    pts.push_back({r * std::cos(a), r * std::sin(a), 0.0});
  }
  return pts;
}

// Fibonacci lattice on the unit sphere surface.
std::vector<Point3> sample_sphere(int count) {
  std::vector<Point3> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = kGoldenAngle * static_cast<double>(i);
    pts.push_back({rho * std::cos(a), rho * std::sin(a), z});
  }
  return pts;
}

std::vector<Point3> sample_primitive(KernelShape shape, int count) {
  switch (shape) {
    case KernelShape::CenterPoint:
      return {{0.0, 0.0, 0.0}};
    case KernelShape::Line:
      return sample_line(count);
    case KernelShape::Plane:
      return sample_disk(count);
    case KernelShape::Sphere:
      return sample_sphere(count);
  }
  throw std::invalid_argument("unknown kernel shape");
}

// Numerical safety: parametric samples can land a hair outside the unit ball.
void clamp_to_unit_ball(std::vector<Point3>& pts) {
  for (auto& p : pts) {
    const double n = p.norm();
    if (n > 1.0) p = p * ((1.0 - 1e-12) / n);
  }
}

}  // namespace

const char* to_string(KernelShape shape) {
  switch (shape) {
    case KernelShape::CenterPoint:
      return "point";
    case KernelShape::Line:
      return "line";
    case KernelShape::Plane:
      return "plane";
    case KernelShape::Sphere:
      return "sphere";
  }
  return "unknown";
}

KernelShape kernel_shape_from_string(const std::string& name) {
  if (name == "point" || name == "center" || name == "center_point") {
    return KernelShape::CenterPoint;
  }
  if (name == "line") return KernelShape::Line;
  if (name == "plane") return KernelShape::Plane;
  if (name == "sphere") return KernelShape::Sphere;
  throw std::invalid_argument("unknown kernel shape '" + name + "'");
}

KernelPrior generate_kernel(KernelShape shape, int n, int oversample_factor) {
  if (n < 1) throw std::invalid_argument("generate_kernel: n must be >= 1");
  if (oversample_factor < 1) {
    throw std::invalid_argument("generate_kernel: oversample factor must be >= 1");
  }
  KernelPrior prior;
  prior.shape = shape;
  if (shape == KernelShape::CenterPoint) {
    prior.points = {{0.0, 0.0, 0.0}};  // n forced to 1
    return prior;
  }
  PointCloud candidates;
  candidates.points = sample_primitive(shape, n * oversample_factor);
  clamp_to_unit_ball(candidates.points);
  if (static_cast<int>(candidates.points.size()) <= n) {
    prior.points = candidates.points;
    return prior;
  }
  const std::vector<int> picked = farthest_point_sample(candidates, n);
  prior.points.reserve(n);
  for (int idx : picked) prior.points.push_back(candidates.points[idx]);
  return prior;
}

std::vector<Point3> scale_kernel(const KernelPrior& kernel, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("scale_kernel: radius must be positive and finite");
  }
  std::vector<Point3> out;
  out.reserve(kernel.points.size());
  for (const auto& p : kernel.points) out.push_back(p * r);
  return out;
}

double kernel_covering_radius(const KernelPrior& kernel, int reference_samples) {
  if (kernel.points.empty()) {
    throw std::invalid_argument("kernel_covering_radius: empty kernel");
  }
  if (kernel.shape == KernelShape::CenterPoint) return 0.0;
  const std::vector<Point3> reference = sample_primitive(kernel.shape, reference_samples);
  double worst = 0.0;
  for (const auto& ref : reference) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& kp : kernel.points) best = std::min(best, squared_distance(ref, kp));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace hpc
