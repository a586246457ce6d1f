// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "hpc/layer.hpp"
#include "test_support.hpp"

using namespace hpc;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

HpcLayerParams make_params(KernelShape shape, int n, int c_in, int c_out, double radius,
                           DistributiveFn f, MatrixMode mode, Rng& rng) {
  HpcLayerParams p;
  p.kernel = generate_kernel(shape, n);
  p.f = f;
  p.radius = radius;
  p.mode = mode;
  p.weights.assign(p.kernel.points.size(), Eigen::MatrixXd());
  for (auto& w : p.weights) w = random_matrix(rng, c_in, c_out);
  return p;
}

struct RefForward {
  Eigen::VectorXd out;
  Eigen::MatrixXd h;
};

// Dense restatement of the layer definition: build the (masked) similarity
// matrix from scratch, then A = D F_in, h_j = A_j W_j, F_out = f_j(h_j).
RefForward reference_forward(const HpcLayerParams& p, const std::vector<Point3>& offsets,
                             const Eigen::MatrixXd& f_in) {
  const std::vector<Point3> scaled = scale_kernel(p.kernel, p.radius);
  const int n = static_cast<int>(scaled.size());
  const int m = static_cast<int>(offsets.size());

  Eigen::MatrixXd dist(n, m);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) dist(j, i) = (scaled[j] - offsets[i]).norm();

  std::vector<std::vector<bool>> present(n, std::vector<bool>(m, p.mode == MatrixMode::Dense));
  if (p.mode == MatrixMode::Shortest) {
    for (int i = 0; i < m; ++i) {
      int best = 0;
      for (int j = 1; j < n; ++j)
        if (dist(j, i) < dist(best, i)) best = j;
      present[best][i] = true;
    }
    for (int j = 0; j < n; ++j) {
      int best = 0;
      for (int i = 1; i < m; ++i)
        if (dist(j, i) < dist(j, best)) best = i;
      present[j][best] = true;
    }
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, f_in.cols());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      if (!present[j][i]) continue;
      const double sim = std::clamp(1.0 - dist(j, i) / p.radius, -1.0, 1.0);
      a.row(j) += sim * f_in.row(i);
    }
  }

  RefForward ref;
  ref.h.resize(n, p.c_out());
  for (int j = 0; j < n; ++j) ref.h.row(j) = a.row(j) * p.weights[j];
  ref.out.resize(p.c_out());
  for (int c = 0; c < p.c_out(); ++c) {
    double v = ref.h(0, c);
    for (int j = 1; j < n; ++j) {
      if (p.f == DistributiveFn::Max) v = std::max(v, ref.h(j, c));
      else if (p.f == DistributiveFn::Min) v = std::min(v, ref.h(j, c));
      else v += ref.h(j, c);
    }
    ref.out(c) = v;
  }
  return ref;
}

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) worst = std::max(worst, hpct::rel_diff(a(r, c), b(r, c)));
  return worst;
}

// Max/Min route gradients through a single kernel point per channel; finite
// differences are only meaningful when that winner is decided by a margin.
bool routes_stable(const Eigen::MatrixXd& h, DistributiveFn f, double margin) {
  if (f == DistributiveFn::Sum || h.rows() < 2) return true;
  for (int c = 0; c < h.cols(); ++c) {
    std::vector<double> col(h.rows());
    for (int j = 0; j < h.rows(); ++j) col[j] = h(j, c);
    std::sort(col.begin(), col.end());
    const double gap = f == DistributiveFn::Max ? col[col.size() - 1] - col[col.size() - 2]
                                                : col[1] - col[0];
    if (gap < margin) return false;
  }
  return true;
}

double forward_loss(const HpcLayerParams& p, const std::vector<Point3>& offsets,
                    const Eigen::MatrixXd& f_in, const Eigen::VectorXd& probe) {
  return hpc_forward(p, offsets, f_in).first.dot(probe);
}

}  // namespace

TEST_CASE("single point, single kernel slice by hand") {
  Rng rng(50);
  HpcLayerParams p = make_params(KernelShape::CenterPoint, 1, 1, 1, 1.0, DistributiveFn::Sum,
                                 MatrixMode::Shortest, rng);
  p.weights[0](0, 0) = 3.0;
  const std::vector<Point3> offsets = {{0.5, 0, 0}};
  Eigen::MatrixXd f_in(1, 1);
  f_in << 2.0;

  for (DistributiveFn f :
       {DistributiveFn::Max, DistributiveFn::Min, DistributiveFn::Sum}) {
    p.f = f;
    // similarity 1 - 0.5/1 = 0.5, A = 0.5 * 2 = 1, h = 1 * 3 = 3.
    auto [out, cache] = hpc_forward(p, offsets, f_in);
    REQUIRE(out.size() == 1);
    CHECK(out(0) == doctest::Approx(3.0));
    CHECK(cache.m == 1);
    REQUIRE(cache.dbar != nullptr);
    CHECK(*cache.dbar->at(0, 0) == doctest::Approx(0.5));

    Eigen::VectorXd d_out(1);
    d_out << 1.0;
    const LayerGradients g = hpc_backward(cache, p, f_in, d_out);
    CHECK(g.d_weights[0](0, 0) == doctest::Approx(1.0));  // A^T dh
    CHECK(g.d_features(0, 0) == doctest::Approx(1.5));    // dbar^T (dh W^T)
  }
}

TEST_CASE("zero weights produce zero output") {
  Rng rng(51);
  for (DistributiveFn f :
       {DistributiveFn::Max, DistributiveFn::Min, DistributiveFn::Sum}) {
    HpcLayerParams p =
        make_params(KernelShape::Sphere, 6, 3, 4, 1.0, f, MatrixMode::Shortest, rng);
    for (auto& w : p.weights) w.setZero();
    const auto out = hpc_forward(p, hpct::random_ball_points(rng, 9, 0.8), random_matrix(rng, 9, 3))
                         .first;
    CHECK(out.isZero(0.0));
  }
}

TEST_CASE("forward matches the dense reference recompute") {
  Rng rng(52);
  for (int trial = 0; trial < 60; ++trial) {
    const auto shape = static_cast<KernelShape>(rng.uniform_int(0, 3));
    const auto f = static_cast<DistributiveFn>(rng.uniform_int(0, 2));
    const auto mode = rng.uniform_int(0, 1) == 0 ? MatrixMode::Shortest : MatrixMode::Dense;
    const int n = rng.uniform_int(1, 9);
    const int m = rng.uniform_int(1, 12);
    const int c_in = rng.uniform_int(1, 4);
    const int c_out = rng.uniform_int(1, 5);
    HpcLayerParams p = make_params(shape, n, c_in, c_out, rng.uniform(0.3, 2.0), f, mode, rng);

    auto offsets = hpct::random_ball_points(rng, m, p.radius * 0.95);
    if (m >= 2 && rng.uniform_int(0, 1) == 0) offsets[m - 1] = offsets[0];  // duplicate neighbor

    const Eigen::MatrixXd f_in = random_matrix(rng, m, c_in);
    const auto [out, cache] = hpc_forward(p, offsets, f_in);
    const RefForward ref = reference_forward(p, offsets, f_in);

    CHECK(max_rel_diff(out, ref.out) <= 1e-12);
    CHECK(max_rel_diff(cache.h, ref.h) <= 1e-12);
    if (mode == MatrixMode::Dense) {
      CHECK(cache.dbar->nnz() == p.n() * m);
    } else {
      CHECK(cache.dbar->nnz() <= p.n() + m);
    }
  }
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(53);
  const double eps = 1e-6;
  for (DistributiveFn f :
       {DistributiveFn::Max, DistributiveFn::Min, DistributiveFn::Sum}) {
    int accepted = 0;
    for (int attempt = 0; attempt < 40 && accepted < 4; ++attempt) {
      HpcLayerParams p =
          make_params(KernelShape::Sphere, 5, 3, 4, 1.0, f, MatrixMode::Shortest, rng);
      const auto offsets = hpct::random_ball_points(rng, 7, 0.9);
      const Eigen::MatrixXd f_in = random_matrix(rng, 7, 3);

      auto [out, cache] = hpc_forward(p, offsets, f_in);
      if (!routes_stable(cache.h, f, 1e-3)) continue;
      ++accepted;

      const Eigen::VectorXd probe = random_matrix(rng, 4, 1);
      const LayerGradients g = hpc_backward(cache, p, f_in, probe);

      double worst = 0.0;
      for (std::size_t j = 0; j < p.weights.size(); ++j) {
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 4; ++c) {
            HpcLayerParams q = p;
            q.weights[j](r, c) = p.weights[j](r, c) + eps;
            const double hi = forward_loss(q, offsets, f_in, probe);
            q.weights[j](r, c) = p.weights[j](r, c) - eps;
            const double lo = forward_loss(q, offsets, f_in, probe);
            worst = std::max(worst, hpct::rel_diff((hi - lo) / (2 * eps), g.d_weights[j](r, c)));
          }
        }
      }
      for (int i = 0; i < 7; ++i) {
        for (int c = 0; c < 3; ++c) {
          Eigen::MatrixXd q = f_in;
          q(i, c) = f_in(i, c) + eps;
          const double hi = forward_loss(p, offsets, q, probe);
          q(i, c) = f_in(i, c) - eps;
          const double lo = forward_loss(p, offsets, q, probe);
          worst = std::max(worst, hpct::rel_diff((hi - lo) / (2 * eps), g.d_features(i, c)));
        }
      }
      CHECK(worst <= 1e-5);
    }
    CHECK(accepted == 4);
  }
}

TEST_CASE("neighbor order does not matter") {
  Rng rng(54);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = static_cast<DistributiveFn>(rng.uniform_int(0, 2));
    HpcLayerParams p = make_params(KernelShape::Plane, 7, 2, 3, 1.0, f, MatrixMode::Shortest, rng);
    const int m = rng.uniform_int(2, 10);
    const auto offsets = hpct::random_ball_points(rng, m, 0.9);
    const Eigen::MatrixXd f_in = random_matrix(rng, m, 2);

    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(0, i - 1)]);

    std::vector<Point3> off_p(m);
    Eigen::MatrixXd fin_p(m, 2);
    for (int i = 0; i < m; ++i) {
      off_p[perm[i]] = offsets[i];
      fin_p.row(perm[i]) = f_in.row(i);
    }

    const auto [out, cache] = hpc_forward(p, offsets, f_in);
    const auto [out_p, cache_p] = hpc_forward(p, off_p, fin_p);
    CHECK(max_rel_diff(out, out_p) <= 1e-12);

    const Eigen::VectorXd probe = random_matrix(rng, 3, 1);
    const Eigen::MatrixXd df = hpc_backward(cache, p, f_in, probe).d_features;
    const Eigen::MatrixXd df_p = hpc_backward(cache_p, p, fin_p, probe).d_features;
    for (int i = 0; i < m; ++i) CHECK(max_rel_diff(df.row(i), df_p.row(perm[i])) <= 1e-12);
  }
}

TEST_CASE("power-of-two rescaling of geometry and radius is exact") {
  Rng rng(55);
  for (double s : {2.0, 0.5, 4.0}) {
    for (int trial = 0; trial < 15; ++trial) {
      const auto f = static_cast<DistributiveFn>(rng.uniform_int(0, 2));
      HpcLayerParams p =
          make_params(KernelShape::Sphere, 6, 2, 3, 1.0, f, MatrixMode::Shortest, rng);
      const auto offsets = hpct::random_ball_points(rng, 8, 0.9);
      const Eigen::MatrixXd f_in = random_matrix(rng, 8, 2);

      HpcLayerParams ps = p;
      ps.radius = p.radius * s;
      std::vector<Point3> scaled = offsets;
      for (auto& o : scaled) o = o * s;

      const auto base = hpc_forward(p, offsets, f_in).first;
      const auto res = hpc_forward(ps, scaled, f_in).first;
      CHECK(base == res);  // bitwise: every distance/radius ratio is preserved
    }
  }

  // Generic scale factors agree to rounding.
  for (int trial = 0; trial < 15; ++trial) {
    HpcLayerParams p = make_params(KernelShape::Sphere, 6, 2, 3, 1.0, DistributiveFn::Sum,
                                   MatrixMode::Shortest, rng);
    const auto offsets = hpct::random_ball_points(rng, 8, 0.9);
    const Eigen::MatrixXd f_in = random_matrix(rng, 8, 2);
    HpcLayerParams ps = p;
    ps.radius = p.radius * 1.7;
    std::vector<Point3> scaled = offsets;
    for (auto& o : scaled) o = o * 1.7;
    CHECK(max_rel_diff(hpc_forward(p, offsets, f_in).first,
                       hpc_forward(ps, scaled, f_in).first) <= 1e-9);
  }
}

TEST_CASE("origin kernel output is rotation invariant") {
  Rng rng(56);
  for (int trial = 0; trial < 40; ++trial) {
    const auto f = static_cast<DistributiveFn>(rng.uniform_int(0, 2));
    HpcLayerParams p =
        make_params(KernelShape::CenterPoint, 1, 3, 4, 4.0, f, MatrixMode::Shortest, rng);
    const int m = rng.uniform_int(1, 10);
    // Dyadic offsets keep rotated norms bitwise equal (exact invariance).
    const auto offsets = hpct::random_dyadic_points(rng, m);
    const Eigen::MatrixXd f_in = random_matrix(rng, m, 3);

    const auto base = hpc_forward(p, offsets, f_in).first;
    const auto rotated = hpct::random_octahedral_rotation(rng).apply(offsets);
    CHECK(hpc_forward(p, rotated, f_in).first == base);

    const auto general = hpct::random_rotation(rng).apply(offsets);
    CHECK(max_rel_diff(hpc_forward(p, general, f_in).first, base) <= 1e-12);
  }
}

TEST_CASE("empty neighborhood short-circuits") {
  Rng rng(57);
  HpcLayerParams p =
      make_params(KernelShape::Sphere, 4, 2, 3, 1.0, DistributiveFn::Max, MatrixMode::Shortest, rng);
  const auto [out, cache] = hpc_forward(p, {}, Eigen::MatrixXd(0, 2));
  CHECK(out.isZero(0.0));
  CHECK(cache.m == 0);

  Eigen::VectorXd d_out = Eigen::VectorXd::Ones(3);
  const LayerGradients g = hpc_backward(cache, p, Eigen::MatrixXd(0, 2), d_out);
  for (const auto& dw : g.d_weights) CHECK(dw.isZero(0.0));
  CHECK(g.d_features.rows() == 0);
}

TEST_CASE("parameter and cache contract violations throw") {
  Rng rng(58);
  HpcLayerParams p =
      make_params(KernelShape::Sphere, 4, 2, 3, 1.0, DistributiveFn::Sum, MatrixMode::Shortest, rng);
  const auto offsets = hpct::random_ball_points(rng, 5, 0.9);
  const Eigen::MatrixXd f_in = random_matrix(rng, 5, 2);

  HpcLayerParams bad = p;
  bad.weights.clear();
  CHECK_THROWS_AS(hpc_forward(bad, offsets, f_in), std::invalid_argument);

  bad = p;
  bad.weights.pop_back();  // slice count no longer matches kernel points
  CHECK_THROWS_AS(hpc_forward(bad, offsets, f_in), std::invalid_argument);

  bad = p;
  bad.weights[2] = Eigen::MatrixXd::Zero(3, 3);  // inconsistent slice shape
  CHECK_THROWS_AS(hpc_forward(bad, offsets, f_in), std::invalid_argument);

  bad = p;
  bad.radius = 0.0;
  CHECK_THROWS_AS(hpc_forward(bad, offsets, f_in), std::invalid_argument);

  CHECK_THROWS_AS(hpc_forward(p, offsets, random_matrix(rng, 4, 2)), std::invalid_argument);

  auto [out, cache] = hpc_forward(p, offsets, f_in);
  Eigen::VectorXd d_out = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(hpc_backward(cache, p, f_in, Eigen::VectorXd::Ones(2)), std::invalid_argument);
  CHECK_THROWS_AS(hpc_backward(cache, p, random_matrix(rng, 6, 2), d_out), ContractError);

  LayerActivationCache stale = cache;
  stale.h = Eigen::MatrixXd::Zero(2, 3);  // wrong kernel count
  CHECK_THROWS_AS(hpc_backward(stale, p, f_in, d_out), ContractError);
}

TEST_CASE("cloud overload resolves neighborhoods and validates indices") {
  Rng rng(59);
  HpcLayerParams p =
      make_params(KernelShape::Sphere, 4, 2, 3, 1.0, DistributiveFn::Sum, MatrixMode::Shortest, rng);
  const PointCloud cloud = hpct::random_cloud(rng, 12, 0.4);

  Neighborhood q;
  q.center = cloud.points[3];
  q.indices = {1, 3, 7};
  std::vector<Point3> offsets;
  for (int idx : q.indices) offsets.push_back(cloud.points[idx] - q.center);
  const Eigen::MatrixXd f_in = random_matrix(rng, 3, 2);

  CHECK(hpc_forward(p, cloud, q, f_in).first == hpc_forward(p, offsets, f_in).first);

  q.indices = {1, 99};
  CHECK_THROWS_AS(hpc_forward(p, cloud, q, random_matrix(rng, 2, 2)), std::invalid_argument);
}

TEST_CASE("multi-kernel relu composition by hand") {
  Rng rng(60);
  MultiKernelParams mk;
  for (int k = 0; k < 2; ++k) {
    mk.kernels.push_back(make_params(KernelShape::CenterPoint, 1, 1, 2, 1.0, DistributiveFn::Sum,
                                     MatrixMode::Shortest, rng));
  }
  mk.kernels[0].weights[0] << 1.0, -2.0;
  mk.kernels[1].weights[0] << 3.0, 4.0;

  // One neighbor at half radius with feature 2: A = 1 for both kernels.
  const std::vector<Point3> offsets = {{0.5, 0, 0}};
  Eigen::MatrixXd f_in(1, 1);
  f_in << 2.0;

  const auto [out, cache] = multi_kernel_forward(mk, offsets, f_in);
  REQUIRE(out.size() == 2);
  CHECK(out(0) == doctest::Approx(4.0));  // relu(relu(1) + relu(3))
  CHECK(out(1) == doctest::Approx(4.0));  // relu(relu(-2) + relu(4))
  CHECK(cache.pre_relu(0, 0) == doctest::Approx(1.0));
  CHECK(cache.pre_relu(0, 1) == doctest::Approx(-2.0));
  CHECK(cache.pre_relu(1, 0) == doctest::Approx(3.0));
  CHECK(cache.pre_relu(1, 1) == doctest::Approx(4.0));

  // The gated channel passes no gradient to the first kernel.
  Eigen::VectorXd d_out(2);
  d_out << 1.0, 1.0;
  const MultiKernelGradients g = multi_kernel_backward(cache, mk, f_in, d_out);
  CHECK(g.per_kernel[0].d_weights[0](0, 0) == doctest::Approx(1.0));
  CHECK(g.per_kernel[0].d_weights[0](0, 1) == 0.0);
  CHECK(g.per_kernel[1].d_weights[0](0, 0) == doctest::Approx(1.0));
  CHECK(g.per_kernel[1].d_weights[0](0, 1) == doctest::Approx(1.0));
}

TEST_CASE("single-kernel aggregation reduces to a plain relu") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    MultiKernelParams mk;
    mk.kernels.push_back(make_params(KernelShape::Sphere, 5, 2, 3, 1.0, DistributiveFn::Sum,
                                     MatrixMode::Shortest, rng));
    const auto offsets = hpct::random_ball_points(rng, 6, 0.9);
    const Eigen::MatrixXd f_in = random_matrix(rng, 6, 2);
    const auto single = hpc_forward(mk.kernels[0], offsets, f_in).first;
    const auto multi = multi_kernel_forward(mk, offsets, f_in).first;
    CHECK(multi == single.cwiseMax(0.0));
  }
}

TEST_CASE("fully gated multi-kernel output is zero with zero gradients") {
  Rng rng(62);
  MultiKernelParams mk;
  for (int k = 0; k < 2; ++k) {
    mk.kernels.push_back(make_params(KernelShape::CenterPoint, 1, 1, 2, 1.0, DistributiveFn::Sum,
                                     MatrixMode::Shortest, rng));
  }
  mk.kernels[0].weights[0] << -1.0, -3.0;
  mk.kernels[1].weights[0] << -2.0, -5.0;
  const std::vector<Point3> offsets = {{0.5, 0, 0}};
  Eigen::MatrixXd f_in(1, 1);
  f_in << 2.0;

  const auto [out, cache] = multi_kernel_forward(mk, offsets, f_in);
  CHECK(out.isZero(0.0));

  const MultiKernelGradients g =
      multi_kernel_backward(cache, mk, f_in, Eigen::VectorXd::Ones(2));
  for (const auto& pk : g.per_kernel) {
    for (const auto& dw : pk.d_weights) CHECK(dw.isZero(0.0));
    CHECK(pk.d_features.isZero(0.0));
  }
}

TEST_CASE("multi-kernel gradients match finite differences") {
  Rng rng(63);
  const double eps = 1e-6;
  int accepted = 0;
  for (int attempt = 0; attempt < 40 && accepted < 3; ++attempt) {
    MultiKernelParams mk;
    mk.kernels.push_back(make_params(KernelShape::Sphere, 4, 2, 3, 1.0, DistributiveFn::Sum,
                                     MatrixMode::Shortest, rng));
    mk.kernels.push_back(make_params(KernelShape::Line, 3, 2, 3, 1.0, DistributiveFn::Sum,
                                     MatrixMode::Shortest, rng));
    mk.kernels.push_back(make_params(KernelShape::Plane, 5, 2, 3, 1.0, DistributiveFn::Sum,
                                     MatrixMode::Shortest, rng));
    const auto offsets = hpct::random_ball_points(rng, 6, 0.9);
    const Eigen::MatrixXd f_in = random_matrix(rng, 6, 2);

    const auto [out, cache] = multi_kernel_forward(mk, offsets, f_in);
    // Keep every relu comfortably away from its kink.
    if (cache.pre_relu.cwiseAbs().minCoeff() < 1e-3) continue;
    ++accepted;

    const Eigen::VectorXd probe = random_matrix(rng, 3, 1);
    const MultiKernelGradients g = multi_kernel_backward(cache, mk, f_in, probe);

    auto loss = [&](const MultiKernelParams& q, const Eigen::MatrixXd& fin) {
      return multi_kernel_forward(q, offsets, fin).first.dot(probe);
    };

    double worst = 0.0;
    for (std::size_t k = 0; k < mk.kernels.size(); ++k) {
      for (std::size_t j = 0; j < mk.kernels[k].weights.size(); ++j) {
        for (int r = 0; r < 2; ++r) {
          for (int c = 0; c < 3; ++c) {
            MultiKernelParams q = mk;
            q.kernels[k].weights[j](r, c) += eps;
            const double hi = loss(q, f_in);
            q.kernels[k].weights[j](r, c) -= 2 * eps;
            const double lo = loss(q, f_in);
            worst = std::max(
                worst, hpct::rel_diff((hi - lo) / (2 * eps), g.per_kernel[k].d_weights[j](r, c)));
          }
        }
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int c = 0; c < 2; ++c) {
        Eigen::MatrixXd q = f_in;
        q(i, c) += eps;
        const double hi = loss(mk, q);
        q(i, c) -= 2 * eps;
        const double lo = loss(mk, q);
        double total = 0.0;
        for (const auto& pk : g.per_kernel) total += pk.d_features(i, c);
        worst = std::max(worst, hpct::rel_diff((hi - lo) / (2 * eps), total));
      }
    }
    CHECK(worst <= 1e-5);
  }
  CHECK(accepted == 3);
}

TEST_CASE("multi-kernel parameter contracts") {
  Rng rng(64);
  CHECK_THROWS_AS(multi_kernel_forward({}, {{0.1, 0, 0}}, Eigen::MatrixXd::Ones(1, 1)),
                  std::invalid_argument);

  MultiKernelParams mk;
  mk.kernels.push_back(make_params(KernelShape::Sphere, 4, 2, 3, 1.0, DistributiveFn::Sum,
                                   MatrixMode::Shortest, rng));
  mk.kernels.push_back(make_params(KernelShape::Line, 3, 2, 4, 1.0, DistributiveFn::Sum,
                                   MatrixMode::Shortest, rng));  // c_out differs
  CHECK_THROWS_AS(
      multi_kernel_forward(mk, hpct::random_ball_points(rng, 3, 0.9), random_matrix(rng, 3, 2)),
      std::invalid_argument);

  mk.kernels[1] = make_params(KernelShape::Line, 3, 2, 3, 2.0, DistributiveFn::Sum,
                              MatrixMode::Shortest, rng);  // radius differs
  CHECK_THROWS_AS(
      multi_kernel_forward(mk, hpct::random_ball_points(rng, 3, 0.9), random_matrix(rng, 3, 2)),
      std::invalid_argument);
}

TEST_CASE("weight init is seeded, bounded and centered") {
  const auto a = init_weights(4, 50, 50, 7);
  const auto b = init_weights(4, 50, 50, 7);
  const auto c = init_weights(4, 50, 50, 8);
  REQUIRE(a.size() == 4);
  bool all_equal = true;
  bool any_diff_seed = false;
  double sum = 0.0;
  double peak = 0.0;
  for (int j = 0; j < 4; ++j) {
    all_equal = all_equal && a[j] == b[j];
    any_diff_seed = any_diff_seed || a[j] != c[j];
    sum += a[j].sum();
    peak = std::max(peak, a[j].cwiseAbs().maxCoeff());
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);

  const double scale = init_weight_scale(4, 50, 50);
  CHECK(scale == doctest::Approx(std::sqrt(6.0 / (4 * 50 + 50))));
  CHECK(init_weight_scale(2, 3, 4) == doctest::Approx(std::sqrt(0.6)));
  CHECK(peak <= scale);
  // Mean of 10000 uniforms in [-scale, scale]: 4 sigma band.
  CHECK(std::abs(sum / 10000.0) <= 4.0 * scale / std::sqrt(3.0 * 10000.0));

  CHECK_THROWS_AS(init_weights(0, 2, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_weight_scale(1, 0, 2), std::invalid_argument);
}

TEST_CASE("sum aggregation is linear in the weights") {
  Rng rng(65);
  HpcLayerParams p =
      make_params(KernelShape::Sphere, 5, 2, 3, 1.0, DistributiveFn::Sum, MatrixMode::Shortest, rng);
  const auto offsets = hpct::random_ball_points(rng, 6, 0.9);
  const Eigen::MatrixXd f_in = random_matrix(rng, 6, 2);
  const Eigen::VectorXd base = hpc_forward(p, offsets, f_in).first;

  HpcLayerParams doubled = p;
  for (auto& w : doubled.weights) w *= 2.0;
  CHECK(hpc_forward(doubled, offsets, f_in).first == 2.0 * base);
}
