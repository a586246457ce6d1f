// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hpc/geometry.hpp"
#include "hpc/hausdorff.hpp"
#include "hpc/kernel_priors.hpp"
#include "hpc/layer.hpp"

namespace hpc {

/// Encoder/decoder segmentation network description. Neighborhood radius and
/// subsample cell double per level; channel widths double per block.
struct NetworkConfig {
  int depth = 3;             // encoder levels
  int base_channels = 8;     // level l outputs base_channels * 2^(l+1) channels
  double base_radius = 0.4;  // neighborhood radius at level 0
  double base_cell = 0.15;   // subsample cell unit; level l >= 1 uses base_cell * 2^l
  std::vector<KernelShape> kernels = {KernelShape::Sphere};
  DistributiveFn f = DistributiveFn::Sum;
  MatrixMode matrix_mode = MatrixMode::Shortest;
  int kernel_points = 15;
  int oversample_factor = 64;
  int classes = 4;
  int input_channels = 1;  // clouds without features get a constant-1 column
  bool shortcut = true;    // linear residual path, single-kernel blocks only

  int out_dim(int level) const { return base_channels << (level + 1); }
  int in_dim(int level) const { return level == 0 ? input_channels : out_dim(level - 1); }
  double radius(int level) const { return base_radius * static_cast<double>(1 << level); }
  double cell(int level) const { return base_cell * static_cast<double>(1 << level); }

  /// Throws std::invalid_argument on any out-of-range field.
  void validate() const;
};

/// Pointwise affine map. b is 1 x out, or empty for bias-free maps.
struct LinearParams {
  Eigen::MatrixXd w;
  Eigen::MatrixXd b;

  int in() const { return static_cast<int>(w.rows()); }
  int out() const { return static_cast<int>(w.cols()); }
};

/// One encoder level: conv1 lifts in_dim -> out_dim, conv2 keeps out_dim.
/// Single-kernel blocks may add a bias-free linear shortcut before the final
/// relu; multi-kernel blocks drop the shortcut and rectify per kernel before
/// summing.
struct EncoderBlock {
  MultiKernelParams conv1;
  MultiKernelParams conv2;
  LinearParams shortcut;  // w empty when disabled

  int kernel_count() const { return static_cast<int>(conv1.kernels.size()); }
  bool has_shortcut() const { return shortcut.w.size() > 0; }
};

struct NetworkParams {
  NetworkConfig cfg;
  std::vector<KernelPrior> priors;     // unit-ball priors, one per cfg.kernels entry
  std::vector<EncoderBlock> blocks;    // cfg.depth entries
  std::vector<LinearParams> decoders;  // depth-1 entries; decoders[t] emits out_dim(t)
  LinearParams head;                   // out_dim(0) -> classes, with bias
};

/// Deterministic initialization: every weight stack uniform in
/// +-sqrt(6 / (n*c_in + c_out)), biases zero. Per-tensor seeds are drawn from
/// one master stream so layouts with equal prefixes share initial values.
NetworkParams init_network(const NetworkConfig& cfg, std::uint64_t seed);

/// Every trainable tensor as (name, pointer), in a fixed order shared by the
/// optimizer, checkpoints, and gradient containers.
std::vector<std::pair<std::string, Eigen::MatrixXd*>> parameter_refs(NetworkParams& params);

/// Same structure as params with every trainable tensor zeroed; used for
/// gradients and momentum buffers.
NetworkParams zeros_like(const NetworkParams& params);

/// Weight-independent per-scene geometry, computed once and reused across
/// epochs. Level 0 is the input cloud itself; level l >= 1 voxel-subsamples
/// the previous level. Neighborhoods include their own center point.
struct PyramidLevel {
  PointCloud cloud;
  std::vector<std::vector<int>> sources;  // per point: previous-level voxel members (level 0: empty)
  std::vector<Neighborhood> neighbors;
  // sim[k][i]: normalized similarity matrix between point i's re-centered
  // neighborhood and kernel k scaled to this level's radius.
  std::vector<std::vector<std::shared_ptr<const ShortestDistanceMatrix>>> sim;
  std::vector<int> nearest_coarser;  // per point: nearest next-level index (top level: empty)
};

struct ScenePyramid {
  std::vector<PyramidLevel> levels;
  Eigen::MatrixXd input_features;  // size() x cfg.input_channels
  std::vector<int> labels;         // level-0 labels; empty for unlabeled clouds

  int size() const { return levels.empty() ? 0 : static_cast<int>(levels[0].cloud.size()); }
};

/// Throws std::invalid_argument for an empty cloud or a feature width that
/// disagrees with cfg.input_channels.
ScenePyramid build_pyramid(const PointCloud& cloud, const NetworkConfig& cfg,
                           const std::vector<KernelPrior>& priors, int threads = 1);

/// Activation record for one encoder level.
struct BlockTrace {
  Eigen::MatrixXd input;                 // pooled block input, m x in_dim
  std::vector<Eigen::MatrixXd> raw1;     // per kernel, pre-relu conv1 output
  std::vector<Eigen::MatrixXd> raw2;     // per kernel, pre-relu conv2 output
  std::vector<std::vector<int>> routes1; // per kernel, m*c_out (Max/Min only)
  std::vector<std::vector<int>> routes2;
  Eigen::MatrixXd act1;  // conv2 input
  Eigen::MatrixXd pre2;  // single-kernel final pre-activation (raw2[0] + shortcut)
  Eigen::MatrixXd out;   // block output
};

struct ForwardTrace {
  std::vector<BlockTrace> blocks;
  std::vector<Eigen::MatrixXd> dec_in;   // decoder concat inputs, index t in [0, depth-1)
  std::vector<Eigen::MatrixXd> dec_out;  // post-relu decoder outputs
  Eigen::MatrixXd logits;
};

/// Encoder only: per-level block outputs.
std::vector<Eigen::MatrixXd> encoder_forward(const NetworkParams& params, const ScenePyramid& pyr,
                                             ForwardTrace* trace = nullptr, int threads = 1);

/// Nearest-neighbor upsampling decoder with skip concatenation; returns
/// full-resolution features (size() x out_dim(0)).
Eigen::MatrixXd decoder_forward(const NetworkParams& params, const ScenePyramid& pyr,
                                const std::vector<Eigen::MatrixXd>& encoder_out,
                                ForwardTrace* trace = nullptr);

Eigen::MatrixXd segmentation_head(const LinearParams& head, const Eigen::MatrixXd& features);

/// Full pass; fills trace (when given) with what network_backward needs.
Eigen::MatrixXd network_forward(const NetworkParams& params, const ScenePyramid& pyr,
                                ForwardTrace* trace = nullptr, int threads = 1);

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd d_logits;  // same shape as logits
  int labeled = 0;
};

/// Softmax cross-entropy averaged over labeled points; label -1 is ignored.
/// Throws std::invalid_argument when a label is >= logits.cols().
LossResult cross_entropy_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

/// Gradients for every trainable tensor, shaped like params.
NetworkParams network_backward(const NetworkParams& params, const ScenePyramid& pyr,
                               const ForwardTrace& trace, const Eigen::MatrixXd& d_logits,
                               int threads = 1);

/// v <- momentum*v - lr*g; w <- w + v, over aligned parameter_refs.
void sgd_step(NetworkParams& params, NetworkParams& velocity, const NetworkParams& grads,
              double lr, double momentum);

/// Step schedule: base_lr * 0.5^floor(5*epoch / total_epochs), epoch 0-based.
double learning_rate(double base_lr, int epoch, int total_epochs);

struct TrainOptions {
  int epochs = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  double lr = 1e-2;
  double momentum = 0.9;
  bool log_wall_time = false;     // keep metric logs byte-identical by default
  double target_accuracy = -1.0;  // stop after the epoch reaching this train accuracy (<=0: off)
};

struct TrainState {
  NetworkParams params;
  NetworkParams velocity;
  int epoch = 0;          // completed epochs
  std::string rng_state;  // serialized master engine
};

struct MetricRow {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double miou = 0.0;      // training mIoU for the epoch
  double seconds = 0.0;   // wall time; 0 unless log_wall_time
};

struct TrainResult {
  TrainState state;
  std::vector<MetricRow> log;
};

/// Plain SGD over the dataset in its given order, one update per scene.
/// Scene pyramids are computed once up front. Deterministic for a fixed
/// (cfg, dataset, options) regardless of thread count.
TrainResult train(const NetworkConfig& cfg, const std::vector<PointCloud>& dataset,
                  const TrainOptions& opts);

struct EvalResult {
  Eigen::MatrixXi confusion;      // classes x classes; row = truth, col = prediction
  std::vector<double> class_iou;  // -1 for classes absent from truth and prediction
  double miou = 0.0;              // mean IoU over classes with nonzero union
  double accuracy = 0.0;
  std::int64_t labeled = 0;
};

/// IoU_c = TP / (TP + FP + FN) from a confusion matrix.
EvalResult iou_from_confusion(const Eigen::MatrixXi& confusion);

EvalResult evaluate(const NetworkParams& params, const std::vector<ScenePyramid>& pyramids,
                    int threads = 1);
EvalResult evaluate(const NetworkParams& params, const std::vector<PointCloud>& dataset,
                    int threads = 1);

/// Argmax per row, ties toward the lower class id.
std::vector<int> predict_labels(const Eigen::MatrixXd& logits);

}  // namespace hpc
