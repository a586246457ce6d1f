// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hpc/random.hpp"

namespace hpc {

namespace {

void check_spec(const SceneSpec& spec) {
  if (spec.floor_count < 0 || spec.pole_count < 0 || spec.sphere_count < 0 ||
      spec.clutter_count < 0) {
    throw std::invalid_argument("scene spec: primitive counts must be non-negative");
  }
  if (spec.floor_count == 0 && spec.pole_count == 0 && spec.sphere_count == 0 &&
      spec.clutter_count == 0) {
    throw std::invalid_argument("scene spec: at least one class must have primitives");
  }
  if (spec.floor_points < 0 || spec.pole_points < 0 || spec.sphere_points < 0 ||
      spec.clutter_points < 0) {
    throw std::invalid_argument("scene spec: per-primitive point counts must be non-negative");
  }
  if (!(spec.extent > 0.0)) throw std::invalid_argument("scene spec: extent must be positive");
  if (spec.clutter_radius < 0.0) {
    throw std::invalid_argument("scene spec: negative clutter radius");
  }
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("scene spec: negative noise sigma");
  if (spec.outlier_fraction < 0.0 || spec.outlier_fraction > 1.0) {
    throw std::invalid_argument("scene spec: outlier fraction must be in [0, 1]");
  }
}

}  // namespace

PointCloud generate_scene(const SceneSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);
  PointCloud cloud;
  const int base_total = spec.total_primitive_points();
  const int outliers = static_cast<int>(std::llround(spec.outlier_fraction * base_total));
  cloud.points.reserve(base_total + outliers);
  cloud.labels.reserve(base_total + outliers);

  auto emit = [&](Point3 p, int label, bool noisy) {
    if (noisy && spec.noise_sigma > 0.0) {
      p.x += spec.noise_sigma * rng.normal();
      p.y += spec.noise_sigma * rng.normal();
      p.z += spec.noise_sigma * rng.normal();
    }
    cloud.points.push_back(p);
    cloud.labels.push_back(label);
  };

  struct FloorRect {
    double x0, x1, y0, y1, z;
  };
  struct PoleSeg {
    double x, y, h;
  };
  struct SphereShell {
    Point3 c;
    double r;
  };
  std::vector<FloorRect> floors;
  std::vector<PoleSeg> poles;
  std::vector<SphereShell> shells;

  // Floors: index 0 spans the footprint at z = 0, the rest are raised slabs.
  for (int f = 0; f < spec.floor_count; ++f) {
    double x0 = 0.0, x1 = spec.extent, y0 = 0.0, y1 = spec.extent, z = 0.0;
    if (f > 0) {
      const double hx = rng.uniform(0.15, 0.3) * spec.extent;
      const double hy = rng.uniform(0.15, 0.3) * spec.extent;
      const double cx = rng.uniform(hx, spec.extent - hx);
      const double cy = rng.uniform(hy, spec.extent - hy);
      x0 = cx - hx;
      x1 = cx + hx;
      y0 = cy - hy;
      y1 = cy + hy;
      z = rng.uniform(0.4, 1.2);
    }
    floors.push_back({x0, x1, y0, y1, z});
    for (int i = 0; i < spec.floor_points; ++i) {
      emit({rng.uniform(x0, x1), rng.uniform(y0, y1), z}, kClassFloor, true);
    }
  }

  // Poles: vertical segments rising from the floor.
  for (int p = 0; p < spec.pole_count; ++p) {
    const double px = rng.uniform(0.05 * spec.extent, 0.95 * spec.extent);
    const double py = rng.uniform(0.05 * spec.extent, 0.95 * spec.extent);
    const double height = rng.uniform(1.2, 2.5);
    poles.push_back({px, py, height});
    for (int i = 0; i < spec.pole_points; ++i) {
      emit({px, py, rng.uniform(0.0, height)}, kClassPole, true);
    }
  }

  // Spheres: surface-sampled shells floating above the floor.
  for (int s = 0; s < spec.sphere_count; ++s) {
    const double radius = rng.uniform(0.25, 0.5);
    const Point3 center{rng.uniform(0.1 * spec.extent, 0.9 * spec.extent),
                        rng.uniform(0.1 * spec.extent, 0.9 * spec.extent),
                        radius + rng.uniform(0.3, 1.2)};
    shells.push_back({center, radius});
    for (int i = 0; i < spec.sphere_points; ++i) {
      const double z = rng.uniform(-1.0, 1.0);  // area-preserving surface sample
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      emit({center.x + radius * rho * std::cos(a), center.y + radius * rho * std::sin(a),
            center.z + radius * z},
           kClassSphere, true);
    }
  }

  // Distance from p to the nearest structure surface; clutter must stay clear of
  // it so the class remains separable by construction.
  auto surface_gap = [&](const Point3& p) {
    double d = std::numeric_limits<double>::infinity();
    for (const FloorRect& f : floors) {
      const double dx = std::max({f.x0 - p.x, 0.0, p.x - f.x1});
      const double dy = std::max({f.y0 - p.y, 0.0, p.y - f.y1});
      const double dz = p.z - f.z;
      d = std::min(d, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    for (const PoleSeg& q : poles) {
      const double dx = p.x - q.x;
      const double dy = p.y - q.y;
      const double dz = std::max({-p.z, 0.0, p.z - q.h});
      d = std::min(d, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    for (const SphereShell& s : shells) {
      const double dx = p.x - s.c.x;
      const double dy = p.y - s.c.y;
      const double dz = p.z - s.c.z;
      d = std::min(d, std::abs(std::sqrt(dx * dx + dy * dy + dz * dz) - s.r));
    }
    return d;
  };

  // Clutter: solid debris blobs in the free space between structures. Blob
  // centers keep clearance from structure surfaces so the class stays
  // separable; samples fill the blob volume uniformly.
  const double clearance = kClutterClearance + spec.clutter_radius;
  for (int b = 0; b < spec.clutter_count; ++b) {
    Point3 c{};
    for (int attempt = 0; attempt < 64; ++attempt) {
      c = {rng.uniform(0.0, spec.extent), rng.uniform(0.0, spec.extent),
           rng.uniform(clearance, 2.5)};
      if (surface_gap(c) >= clearance) break;
    }
    for (int i = 0; i < spec.clutter_points; ++i) {
      const double z = rng.uniform(-1.0, 1.0);
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double u = std::cbrt(rng.uniform(0.0, 1.0));  // uniform in the ball
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double rr = spec.clutter_radius * u;
      emit({c.x + rr * rho * std::cos(a), c.y + rr * rho * std::sin(a), c.z + rr * z},
           kClassClutter, true);
    }
  }

  // Outliers: uniform in a slightly inflated box, labeled clutter.
  const double pad = 0.1 * spec.extent;
  for (int i = 0; i < outliers; ++i) {
    emit({rng.uniform(-pad, spec.extent + pad), rng.uniform(-pad, spec.extent + pad),
          rng.uniform(0.0, 3.0)},
         kClassClutter, false);
  }
  return cloud;
}

std::vector<PointCloud> generate_dataset(SceneSpec spec, std::uint64_t base_seed, int count) {
  if (count < 0) throw std::invalid_argument("generate_dataset: negative count");
  std::vector<PointCloud> scenes;
  scenes.reserve(count);
  for (int i = 0; i < count; ++i) {
    spec.seed = base_seed + static_cast<std::uint64_t>(i);
    scenes.push_back(generate_scene(spec));
  }
  return scenes;
}

}  // namespace hpc
