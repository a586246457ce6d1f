// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <memory>
#include <stdexcept>
#include <vector>

#include "hpc/hausdorff.hpp"
#include "hpc/kernel_priors.hpp"

namespace hpc {

/// Raised when a backward pass receives a cache inconsistent with its inputs.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// How the layer builds its kernel/neighbor distance matrix.
enum class MatrixMode { Shortest = 0, Dense = 1 };

const char* to_string(MatrixMode mode);
MatrixMode matrix_mode_from_string(const std::string& name);

/// Point convolution parameterized by a geometric kernel prior. Weights hold
/// one c_in x c_out slice per kernel point.
struct HpcLayerParams {
  std::vector<Eigen::MatrixXd> weights;  // n slices, each c_in x c_out
  DistributiveFn f = DistributiveFn::Sum;
  KernelPrior kernel;
  double radius = 1.0;
  MatrixMode mode = MatrixMode::Shortest;

  int n() const { return static_cast<int>(weights.size()); }
  int c_in() const { return weights.empty() ? 0 : static_cast<int>(weights[0].rows()); }
  int c_out() const { return weights.empty() ? 0 : static_cast<int>(weights[0].cols()); }
};

/// Zero-mean uniform init with bound sqrt(6 / (n*c_in + c_out)).
double init_weight_scale(int n, int c_in, int c_out);
std::vector<Eigen::MatrixXd> init_weights(int n, int c_in, int c_out, std::uint64_t seed);

/// Intermediate state retained by a forward pass for its matching backward
/// pass: the normalized similarity matrix, the per-kernel-point contributions
/// h_j, and (Max/Min) the kernel-point index routed to each output channel.
struct LayerActivationCache {
  std::shared_ptr<const ShortestDistanceMatrix> dbar;
  Eigen::MatrixXd h;        // n x c_out, pre-aggregation
  std::vector<int> routes;  // c_out entries for Max/Min, empty for Sum
  int m = 0;                // neighborhood size the pass saw
};

struct LayerGradients {
  std::vector<Eigen::MatrixXd> d_weights;  // same shapes as params.weights
  Eigen::MatrixXd d_features;              // m x c_in
};

/// Forward response of one query point: builds the normalized similarity
/// matrix between the re-centered neighborhood and scale_kernel(kernel, r),
/// then F_out = f_j((D F_in)_j W_j). offsets are neighbor minus query
/// coordinates; f_in rows align with offsets. m = 0 yields a zero output and
/// an empty cache.
std::pair<Eigen::VectorXd, LayerActivationCache> hpc_forward(
    const HpcLayerParams& params, const std::vector<Point3>& offsets,
    const Eigen::MatrixXd& f_in);

/// Convenience overload resolving a Neighborhood against its cloud.
std::pair<Eigen::VectorXd, LayerActivationCache> hpc_forward(const HpcLayerParams& params,
                                                             const PointCloud& cloud,
                                                             const Neighborhood& q,
                                                             const Eigen::MatrixXd& f_in);

/// Forward with a precomputed normalized similarity matrix (already sized
/// n x m for this layer), shared with the cache instead of rebuilt.
std::pair<Eigen::VectorXd, LayerActivationCache> hpc_forward_cached(
    const HpcLayerParams& params, std::shared_ptr<const ShortestDistanceMatrix> dbar,
    const Eigen::MatrixXd& f_in);

/// Gradients of a scalar loss with respect to weights and input features.
/// The similarity matrix is treated as a constant of the geometry; Max/Min
/// route gradients through the recorded argmax indices. Throws ContractError
/// if the cache does not match params/f_in.
LayerGradients hpc_backward(const LayerActivationCache& cache, const HpcLayerParams& params,
                            const Eigen::MatrixXd& f_in, const Eigen::VectorXd& d_out);

/// K kernels, shared c_in/c_out/radius: F = relu(sum_k relu(F_k)).
struct MultiKernelParams {
  std::vector<HpcLayerParams> kernels;
};

struct MultiKernelCache {
  std::vector<LayerActivationCache> per_kernel;
  Eigen::MatrixXd pre_relu;  // K x c_out, per-kernel outputs before the inner relu
};

std::pair<Eigen::VectorXd, MultiKernelCache> multi_kernel_forward(
    const MultiKernelParams& params, const std::vector<Point3>& offsets,
    const Eigen::MatrixXd& f_in);

struct MultiKernelGradients {
  std::vector<LayerGradients> per_kernel;
};

MultiKernelGradients multi_kernel_backward(const MultiKernelCache& cache,
                                           const MultiKernelParams& params,
                                           const Eigen::MatrixXd& f_in,
                                           const Eigen::VectorXd& d_out);

/// Normalized similarity matrix for one query, honoring params.mode.
ShortestDistanceMatrix build_layer_matrix(const HpcLayerParams& params,
                                          const std::vector<Point3>& offsets);

// Lean per-point kernels shared by the cache-based API above and the batched
// network paths. f_rows are the gathered neighbor features (m x c_in).

/// out must hold c_out entries; h (optional) n x c_out; routes (optional,
/// required for Max/Min backward) c_out ints.
void hpc_point_forward(const ShortestDistanceMatrix& dbar, const Eigen::MatrixXd& f_rows,
                       const std::vector<Eigen::MatrixXd>& weights, DistributiveFn f,
                       Eigen::VectorXd& out, Eigen::MatrixXd* h, int* routes);

/// Accumulates weight gradients into dw (same shapes as weights) and writes
/// the n x c_in aggregate gradient dL/dA into da. Scattering da back to
/// per-neighbor feature gradients is the caller's job (via dbar entries).
void hpc_point_backward(const ShortestDistanceMatrix& dbar, const Eigen::MatrixXd& f_rows,
                        const std::vector<Eigen::MatrixXd>& weights, DistributiveFn f,
                        const int* routes, const Eigen::VectorXd& d_out,
                        std::vector<Eigen::MatrixXd>& dw, Eigen::MatrixXd& da);

}  // namespace hpc
