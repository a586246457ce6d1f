// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/layer.hpp"

#include <cmath>

#include "hpc/random.hpp"

namespace hpc {

namespace {

void check_params(const HpcLayerParams& params) {
  if (params.weights.empty()) throw std::invalid_argument("layer has no weight slices");
  if (params.n() != params.kernel.size()) {
    throw std::invalid_argument("weight slice count does not match kernel point count");
  }
  const auto rows = params.weights[0].rows();
  const auto cols = params.weights[0].cols();
  if (rows < 1 || cols < 1) throw std::invalid_argument("weight slices must be non-empty");
  for (const auto& w : params.weights) {
    if (w.rows() != rows || w.cols() != cols) {
      throw std::invalid_argument("weight slices must share one c_in x c_out shape");
    }
  }
  if (!(params.radius > 0.0) || !std::isfinite(params.radius)) {
    throw std::invalid_argument("layer radius must be positive and finite");
  }
}

// A = D F_in, accumulated in stored-entry order (row-major), which is fixed
// by construction and independent of evaluation threading.
Eigen::MatrixXd aggregate(const ShortestDistanceMatrix& dbar, const Eigen::MatrixXd& f_in) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dbar.rows, f_in.cols());
  for (const auto& e : dbar.entries) a.row(e.row) += e.value * f_in.row(e.col);
  return a;
}

}  // namespace

const char* to_string(MatrixMode mode) {
  return mode == MatrixMode::Dense ? "dense" : "shortest";
}

MatrixMode matrix_mode_from_string(const std::string& name) {
  if (name == "shortest") return MatrixMode::Shortest;
  if (name == "dense") return MatrixMode::Dense;
  throw std::invalid_argument("unknown matrix mode '" + name + "'");
}

double init_weight_scale(int n, int c_in, int c_out) {
  if (n < 1 || c_in < 1 || c_out < 1) {
    throw std::invalid_argument("init_weight_scale: dimensions must be >= 1");
  }
  return std::sqrt(6.0 / (static_cast<double>(n) * c_in + c_out));
}

std::vector<Eigen::MatrixXd> init_weights(int n, int c_in, int c_out, std::uint64_t seed) {
  const double bound = init_weight_scale(n, c_in, c_out);
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> w(n, Eigen::MatrixXd(c_in, c_out));
  for (auto& slice : w)
    for (int r = 0; r < c_in; ++r)
      for (int c = 0; c < c_out; ++c) slice(r, c) = rng.uniform(-bound, bound);
  return w;
}

ShortestDistanceMatrix build_layer_matrix(const HpcLayerParams& params,
                                          const std::vector<Point3>& offsets) {
  const std::vector<Point3> scaled = scale_kernel(params.kernel, params.radius);
  if (params.mode == MatrixMode::Dense) {
    return normalize_similarity(dense_distance_matrix(offsets, scaled, params.radius));
  }
  const ShortestDistanceSet s = shortest_distance_set(offsets, scaled);
  return normalize_similarity(build_dmin(s, static_cast<int>(scaled.size()),
                                         static_cast<int>(offsets.size()), params.radius));
}

void hpc_point_forward(const ShortestDistanceMatrix& dbar, const Eigen::MatrixXd& f_rows,
                       const std::vector<Eigen::MatrixXd>& weights, DistributiveFn f,
                       Eigen::VectorXd& out, Eigen::MatrixXd* h, int* routes) {
  const int n = static_cast<int>(weights.size());
  const int c_out = static_cast<int>(weights[0].cols());
  const Eigen::MatrixXd a = aggregate(dbar, f_rows);  // n x c_in
  Eigen::MatrixXd hj(n, c_out);
  for (int j = 0; j < n; ++j) hj.row(j) = a.row(j) * weights[j];

  out.resize(c_out);
  switch (f) {
    case DistributiveFn::Sum:
      out = hj.colwise().sum().transpose();
      break;
    case DistributiveFn::Max:
    case DistributiveFn::Min: {
      for (int c = 0; c < c_out; ++c) {
        int pick = 0;
        for (int j = 1; j < n; ++j) {
          const bool better =
              f == DistributiveFn::Max ? hj(j, c) > hj(pick, c) : hj(j, c) < hj(pick, c);
          if (better) pick = j;  // strict comparison keeps the lowest index on ties
        }
        if (routes) routes[c] = pick;
        out(c) = hj(pick, c);
      }
      break;
    }
  }
  if (h) *h = std::move(hj);
}

void hpc_point_backward(const ShortestDistanceMatrix& dbar, const Eigen::MatrixXd& f_rows,
                        const std::vector<Eigen::MatrixXd>& weights, DistributiveFn f,
                        const int* routes, const Eigen::VectorXd& d_out,
                        std::vector<Eigen::MatrixXd>& dw, Eigen::MatrixXd& da) {
  const int n = static_cast<int>(weights.size());
  const int c_in = static_cast<int>(weights[0].rows());
  const int c_out = static_cast<int>(weights[0].cols());
  const Eigen::MatrixXd a = aggregate(dbar, f_rows);  // n x c_in

  Eigen::MatrixXd dh;
  if (f == DistributiveFn::Sum) {
    dh = d_out.transpose().replicate(n, 1);
  } else {
    dh = Eigen::MatrixXd::Zero(n, c_out);
    for (int c = 0; c < c_out; ++c) dh(routes[c], c) = d_out(c);
  }

  da.resize(n, c_in);
  for (int j = 0; j < n; ++j) {
    dw[j].noalias() += a.row(j).transpose() * dh.row(j);
    da.row(j).noalias() = dh.row(j) * weights[j].transpose();
  }
}

std::pair<Eigen::VectorXd, LayerActivationCache> hpc_forward_cached(
    const HpcLayerParams& params, std::shared_ptr<const ShortestDistanceMatrix> dbar,
    const Eigen::MatrixXd& f_in) {
  check_params(params);
  const int n = params.n();
  const int c_out = params.c_out();
  LayerActivationCache cache;
  cache.m = static_cast<int>(f_in.rows());
  if (f_in.rows() == 0) {  // isolated point: zero response, empty cache
    return {Eigen::VectorXd::Zero(c_out), cache};
  }
  if (f_in.cols() != params.c_in()) {
    throw std::invalid_argument("f_in column count does not match layer c_in");
  }
  if (!dbar || dbar->rows != n || dbar->cols != static_cast<int>(f_in.rows())) {
    throw std::invalid_argument("similarity matrix shape does not match layer/f_in");
  }
  cache.dbar = std::move(dbar);

  Eigen::VectorXd out;
  if (params.f == DistributiveFn::Sum) {
    hpc_point_forward(*cache.dbar, f_in, params.weights, params.f, out, &cache.h, nullptr);
  } else {
    cache.routes.assign(c_out, 0);
    hpc_point_forward(*cache.dbar, f_in, params.weights, params.f, out, &cache.h,
                      cache.routes.data());
  }
  return {out, cache};
}

std::pair<Eigen::VectorXd, LayerActivationCache> hpc_forward(const HpcLayerParams& params,
                                                             const std::vector<Point3>& offsets,
                                                             const Eigen::MatrixXd& f_in) {
  check_params(params);
  if (static_cast<Eigen::Index>(offsets.size()) != f_in.rows()) {
    throw std::invalid_argument("offset count does not match f_in rows");
  }
  if (offsets.empty()) {
    LayerActivationCache cache;
    cache.m = 0;
    return {Eigen::VectorXd::Zero(params.c_out()), cache};
  }
  auto dbar = std::make_shared<ShortestDistanceMatrix>(build_layer_matrix(params, offsets));
  return hpc_forward_cached(params, std::move(dbar), f_in);
}

std::pair<Eigen::VectorXd, LayerActivationCache> hpc_forward(const HpcLayerParams& params,
                                                             const PointCloud& cloud,
                                                             const Neighborhood& q,
                                                             const Eigen::MatrixXd& f_in) {
  std::vector<Point3> offsets;
  offsets.reserve(q.indices.size());
  for (int idx : q.indices) {
    if (idx < 0 || idx >= static_cast<int>(cloud.size())) {
      throw std::invalid_argument("neighborhood index out of range");
    }
    offsets.push_back(cloud.points[idx] - q.center);
  }
  return hpc_forward(params, offsets, f_in);
}

LayerGradients hpc_backward(const LayerActivationCache& cache, const HpcLayerParams& params,
                            const Eigen::MatrixXd& f_in, const Eigen::VectorXd& d_out) {
  check_params(params);
  const int n = params.n();
  const int c_in = params.c_in();
  const int c_out = params.c_out();
  if (d_out.size() != c_out) throw std::invalid_argument("d_out size does not match c_out");

  LayerGradients g;
  g.d_weights.assign(n, Eigen::MatrixXd::Zero(c_in, c_out));
  g.d_features = Eigen::MatrixXd::Zero(f_in.rows(), c_in);
  if (cache.m == 0 && f_in.rows() == 0) return g;  // isolated point: all-zero gradients

  if (cache.m != static_cast<int>(f_in.rows()) || !cache.dbar || cache.dbar->rows != n ||
      cache.dbar->cols != cache.m || cache.h.rows() != n || cache.h.cols() != c_out ||
      (params.f != DistributiveFn::Sum && static_cast<int>(cache.routes.size()) != c_out)) {
    throw ContractError("activation cache is stale for this backward pass");
  }
  if (f_in.cols() != c_in) {
    throw std::invalid_argument("f_in column count does not match layer c_in");
  }

  Eigen::MatrixXd da;
  hpc_point_backward(*cache.dbar, f_in, params.weights, params.f,
                     cache.routes.empty() ? nullptr : cache.routes.data(), d_out, g.d_weights,
                     da);
  for (const auto& e : cache.dbar->entries) {
    g.d_features.row(e.col) += e.value * da.row(e.row);
  }
  return g;
}

std::pair<Eigen::VectorXd, MultiKernelCache> multi_kernel_forward(
    const MultiKernelParams& params, const std::vector<Point3>& offsets,
    const Eigen::MatrixXd& f_in) {
  if (params.kernels.empty()) {
    throw std::invalid_argument("multi_kernel_forward: no kernels");
  }
  const int c_out = params.kernels[0].c_out();
  const int c_in = params.kernels[0].c_in();
  for (const auto& k : params.kernels) {
    if (k.c_out() != c_out || k.c_in() != c_in) {
      throw std::invalid_argument("multi-kernel layers must share c_in/c_out");
    }
    if (k.radius != params.kernels[0].radius) {
      throw std::invalid_argument("multi-kernel layers must share one radius");
    }
  }
  const int kk = static_cast<int>(params.kernels.size());
  MultiKernelCache cache;
  cache.per_kernel.reserve(kk);
  cache.pre_relu.resize(kk, c_out);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(c_out);
  for (int k = 0; k < kk; ++k) {
    auto [out_k, cache_k] = hpc_forward(params.kernels[k], offsets, f_in);
    cache.pre_relu.row(k) = out_k.transpose();
    sum += out_k.cwiseMax(0.0);  // inner relu
    cache.per_kernel.push_back(std::move(cache_k));
  }
  return {sum.cwiseMax(0.0), std::move(cache)};  // outer relu
}

MultiKernelGradients multi_kernel_backward(const MultiKernelCache& cache,
                                           const MultiKernelParams& params,
                                           const Eigen::MatrixXd& f_in,
                                           const Eigen::VectorXd& d_out) {
  const int kk = static_cast<int>(params.kernels.size());
  if (static_cast<int>(cache.per_kernel.size()) != kk || cache.pre_relu.rows() != kk) {
    throw ContractError("multi-kernel cache is stale for this backward pass");
  }
  const int c_out = params.kernels[0].c_out();
  // Outer relu: the pre-activation is a sum of relu outputs, so it is >= 0
  // and its subgradient only vanishes where the sum is exactly 0.
  Eigen::VectorXd outer = Eigen::VectorXd::Zero(c_out);
  for (int k = 0; k < kk; ++k) outer += cache.pre_relu.row(k).cwiseMax(0.0).transpose();

  MultiKernelGradients g;
  g.per_kernel.reserve(kk);
  for (int k = 0; k < kk; ++k) {
    Eigen::VectorXd d_k(c_out);
    for (int c = 0; c < c_out; ++c) {
      const bool outer_open = outer(c) > 0.0;
      const bool inner_open = cache.pre_relu(k, c) > 0.0;
      d_k(c) = outer_open && inner_open ? d_out(c) : 0.0;
    }
    g.per_kernel.push_back(hpc_backward(cache.per_kernel[k], params.kernels[k], f_in, d_k));
  }
  return g;
}

}  // namespace hpc
