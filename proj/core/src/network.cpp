// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "hpc/parallel.hpp"
#include "hpc/random.hpp"

namespace hpc {

void NetworkConfig::validate() const {
  if (depth < 1 || depth > 12) throw std::invalid_argument("config: depth must be in [1, 12]");
  if (base_channels < 1) throw std::invalid_argument("config: base_channels must be >= 1");
  if (!(base_radius > 0.0)) throw std::invalid_argument("config: base_radius must be > 0");
  if (!(base_cell > 0.0)) throw std::invalid_argument("config: base_cell must be > 0");
  if (kernels.empty() || kernels.size() > 4) {
    throw std::invalid_argument("config: kernel set must hold 1 to 4 priors");
  }
  if (kernel_points < 1) throw std::invalid_argument("config: kernel_points must be >= 1");
  if (oversample_factor < 1) throw std::invalid_argument("config: oversample_factor must be >= 1");
  if (classes < 2) throw std::invalid_argument("config: classes must be >= 2");
  if (input_channels < 1) throw std::invalid_argument("config: input_channels must be >= 1");
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& src, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = src.row(idx[r]);
  }
  return out;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

/// d where the matching pre-activation is positive, 0 elsewhere.
Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& d) {
  return (pre.array() > 0.0).select(d, Eigen::MatrixXd::Zero(d.rows(), d.cols()));
}

HpcLayerParams matrix_probe(const NetworkConfig& cfg, const KernelPrior& prior, int level) {
  HpcLayerParams p;
  p.kernel = prior;
  p.radius = cfg.radius(level);
  p.mode = cfg.matrix_mode;
  p.f = cfg.f;
  return p;
}

/// One multi-kernel convolution over a level. raw[k] receives kernel k's
/// pre-activation rows; routes[k] the Max/Min channel routing (m*c_out ints).
void conv_forward(const MultiKernelParams& conv, const PyramidLevel& lv,
                  const Eigen::MatrixXd& in_feat, DistributiveFn f, int threads,
                  std::vector<Eigen::MatrixXd>& raw, std::vector<std::vector<int>>& routes) {
  const int m = static_cast<int>(lv.cloud.size());
  const int kk = static_cast<int>(conv.kernels.size());
  const int c_out = conv.kernels[0].c_out();
  raw.assign(kk, Eigen::MatrixXd(m, c_out));
  routes.assign(kk, {});
  if (f != DistributiveFn::Sum) {
    for (auto& r : routes) r.assign(static_cast<std::size_t>(m) * c_out, 0);
  }
  parallel_for_items(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
    const Eigen::MatrixXd f_rows = gather_rows(in_feat, lv.neighbors[i].indices);
    Eigen::VectorXd out(c_out);
    for (int k = 0; k < kk; ++k) {
      int* rptr = f == DistributiveFn::Sum ? nullptr : routes[k].data() + i * c_out;
      hpc_point_forward(*lv.sim[k][i], f_rows, conv.kernels[k].weights, f, out, nullptr, rptr);
      raw[k].row(static_cast<Eigen::Index>(i)) = out.transpose();
    }
  });
}

/// Backward through one kernel of one convolution. Accumulates weight
/// gradients into dw and input-feature gradients into d_in. Per-chunk weight
/// partials merged in chunk order and a sequential feature scatter keep the
/// result independent of the thread count.
void conv_kernel_backward(const HpcLayerParams& layer, const PyramidLevel& lv, int k,
                          const Eigen::MatrixXd& in_feat, const std::vector<int>& routes,
                          const Eigen::MatrixXd& d_raw, int threads,
                          std::vector<Eigen::MatrixXd>& dw, Eigen::MatrixXd& d_in) {
  const int m = static_cast<int>(lv.cloud.size());
  const int n = layer.n();
  const int c_in = layer.c_in();
  const int c_out = layer.c_out();
  const ChunkPlan plan = ChunkPlan::over(static_cast<std::size_t>(m));
  std::vector<std::vector<Eigen::MatrixXd>> partials(plan.chunks);
  std::vector<Eigen::MatrixXd> da(static_cast<std::size_t>(m));
  parallel_chunks(plan, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto& part = partials[c];
    part.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(c_in, c_out));
    Eigen::VectorXd dv(c_out);
    for (std::size_t i = b; i < e; ++i) {
      const Eigen::MatrixXd f_rows = gather_rows(in_feat, lv.neighbors[i].indices);
      dv = d_raw.row(static_cast<Eigen::Index>(i)).transpose();
      hpc_point_backward(*lv.sim[k][i], f_rows, layer.weights, layer.f,
                         routes.empty() ? nullptr : routes.data() + i * c_out, dv, part, da[i]);
    }
  });
  for (const auto& part : partials) {
    if (part.empty()) continue;
    for (int j = 0; j < n; ++j) dw[j] += part[j];
  }
  for (int i = 0; i < m; ++i) {
    const auto& nb = lv.neighbors[i].indices;
    for (const auto& e : lv.sim[k][i]->entries) {
      d_in.row(nb[e.col]) += e.value * da[i].row(e.row);
    }
  }
}

/// Forward through one encoder block; fills the trace.
void block_forward(const EncoderBlock& block, const PyramidLevel& lv,
                   const Eigen::MatrixXd& input, DistributiveFn f, int threads, BlockTrace& tr) {
  const int kk = block.kernel_count();
  tr.input = input;
  conv_forward(block.conv1, lv, tr.input, f, threads, tr.raw1, tr.routes1);
  if (kk == 1) {
    tr.act1 = relu(tr.raw1[0]);
  } else {
    Eigen::MatrixXd sum = relu(tr.raw1[0]);
    for (int k = 1; k < kk; ++k) sum += relu(tr.raw1[k]);
    tr.act1 = relu(sum);
  }
  conv_forward(block.conv2, lv, tr.act1, f, threads, tr.raw2, tr.routes2);
  if (kk == 1) {
    tr.pre2 = tr.raw2[0];
    if (block.has_shortcut()) tr.pre2 += tr.input * block.shortcut.w;
    tr.out = relu(tr.pre2);
  } else {
    Eigen::MatrixXd sum = relu(tr.raw2[0]);
    for (int k = 1; k < kk; ++k) sum += relu(tr.raw2[k]);
    tr.out = relu(sum);
  }
}

/// Backward through one encoder block. Returns the gradient w.r.t. the block
/// input; weight gradients accumulate into g_block.
Eigen::MatrixXd block_backward(const EncoderBlock& block, EncoderBlock& g_block,
                               const PyramidLevel& lv, const BlockTrace& tr,
                               const Eigen::MatrixXd& d_out, DistributiveFn f, int threads) {
  const int kk = block.kernel_count();
  const int m = static_cast<int>(lv.cloud.size());
  const int c_in = static_cast<int>(tr.input.cols());
  const int c_mid = static_cast<int>(tr.act1.cols());

  Eigen::MatrixXd d_act1 = Eigen::MatrixXd::Zero(m, c_mid);
  Eigen::MatrixXd d_input = Eigen::MatrixXd::Zero(m, c_in);

  if (kk == 1) {
    const Eigen::MatrixXd d_pre2 = relu_mask(tr.pre2, d_out);
    if (block.has_shortcut()) {
      g_block.shortcut.w += tr.input.transpose() * d_pre2;
      d_input += d_pre2 * block.shortcut.w.transpose();
    }
    conv_kernel_backward(block.conv2.kernels[0], lv, 0, tr.act1, tr.routes2[0], d_pre2, threads,
                         g_block.conv2.kernels[0].weights, d_act1);
    const Eigen::MatrixXd d_pre1 = relu_mask(tr.raw1[0], d_act1);
    conv_kernel_backward(block.conv1.kernels[0], lv, 0, tr.input, tr.routes1[0], d_pre1, threads,
                         g_block.conv1.kernels[0].weights, d_input);
    return d_input;
  }

  // relu(sum_k relu(raw_k)): the outer gate is open where the output is
  // positive, the inner gate per kernel where its raw value is positive.
  const Eigen::MatrixXd d_sum2 = relu_mask(tr.out, d_out);
  for (int k = 0; k < kk; ++k) {
    const Eigen::MatrixXd d_raw2 = relu_mask(tr.raw2[k], d_sum2);
    conv_kernel_backward(block.conv2.kernels[k], lv, k, tr.act1, tr.routes2[k], d_raw2, threads,
                         g_block.conv2.kernels[k].weights, d_act1);
  }
  const Eigen::MatrixXd d_sum1 = relu_mask(tr.act1, d_act1);
  for (int k = 0; k < kk; ++k) {
    const Eigen::MatrixXd d_raw1 = relu_mask(tr.raw1[k], d_sum1);
    conv_kernel_backward(block.conv1.kernels[k], lv, k, tr.input, tr.routes1[k], d_raw1, threads,
                         g_block.conv1.kernels[k].weights, d_input);
  }
  return d_input;
}

/// Voxel-mean pooling of fine features onto the coarser level.
Eigen::MatrixXd pool_to_level(const PyramidLevel& lv, const Eigen::MatrixXd& fine) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(lv.cloud.size()), fine.cols());
  for (std::size_t i = 0; i < lv.sources.size(); ++i) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(fine.cols());
    for (int s : lv.sources[i]) acc += fine.row(s);
    out.row(static_cast<Eigen::Index>(i)) = acc / static_cast<double>(lv.sources[i].size());
  }
  return out;
}

LinearParams init_linear(int in, int out, bool bias, Rng& rng) {
  LinearParams p;
  p.w = init_weights(1, in, out, rng.raw())[0];
  if (bias) p.b = Eigen::MatrixXd::Zero(1, out);
  return p;
}

HpcLayerParams init_conv_layer(const NetworkConfig& cfg, const KernelPrior& prior, int level,
                               int c_in, int c_out, Rng& rng) {
  HpcLayerParams p = matrix_probe(cfg, prior, level);
  p.weights = init_weights(prior.size(), c_in, c_out, rng.raw());
  return p;
}

NetworkParams init_network_impl(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParams net;
  net.cfg = cfg;
  net.priors.reserve(cfg.kernels.size());
  for (KernelShape shape : cfg.kernels) {
    net.priors.push_back(generate_kernel(shape, cfg.kernel_points, cfg.oversample_factor));
  }
  const int kk = static_cast<int>(cfg.kernels.size());
  // The combiner sums K rectified convolutions whose entries have positive
  // mean, so the stage output grows linearly in K; shrink each draw by 1/K to
  // keep the summed response at the single-kernel scale. K = 1 is untouched.
  const double kernel_scale = 1.0 / static_cast<double>(kk);
  auto scaled_conv = [&](const KernelPrior& prior, int l, int c_in, int c_out) {
    HpcLayerParams p = init_conv_layer(cfg, prior, l, c_in, c_out, rng);
    if (kk > 1) {
      for (Eigen::MatrixXd& w : p.weights) w *= kernel_scale;
    }
    return p;
  };
  net.blocks.resize(cfg.depth);
  for (int l = 0; l < cfg.depth; ++l) {
    EncoderBlock& b = net.blocks[l];
    const int c_in = cfg.in_dim(l);
    const int c_out = cfg.out_dim(l);
    for (int k = 0; k < kk; ++k) {
      b.conv1.kernels.push_back(scaled_conv(net.priors[k], l, c_in, c_out));
    }
    for (int k = 0; k < kk; ++k) {
      b.conv2.kernels.push_back(scaled_conv(net.priors[k], l, c_out, c_out));
    }
    if (kk == 1 && cfg.shortcut) b.shortcut = init_linear(c_in, c_out, false, rng);
  }
  for (int t = 0; t + 1 < cfg.depth; ++t) {
    net.decoders.push_back(init_linear(cfg.out_dim(t + 1) + cfg.out_dim(t), cfg.out_dim(t),
                                       true, rng));
  }
  // Zero classifier start: first-step logits are 0, so the initial loss is
  // ln(classes) instead of whatever scale the random feature stack produces.
  net.head = init_linear(cfg.out_dim(0), cfg.classes, true, rng);
  net.head.w.setZero();
  return net;
}

}  // namespace

NetworkParams init_network(const NetworkConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return init_network_impl(cfg, rng);
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> parameter_refs(NetworkParams& params) {
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> refs;
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    EncoderBlock& b = params.blocks[l];
    const std::string base = "enc" + std::to_string(l);
    auto add_conv = [&](MultiKernelParams& conv, const char* tag) {
      for (std::size_t k = 0; k < conv.kernels.size(); ++k) {
        auto& w = conv.kernels[k].weights;
        for (std::size_t j = 0; j < w.size(); ++j) {
          refs.emplace_back(base + ".k" + std::to_string(k) + "." + tag + ".w" +
                                std::to_string(j),
                            &w[j]);
        }
      }
    };
    add_conv(b.conv1, "conv1");
    add_conv(b.conv2, "conv2");
    if (b.has_shortcut()) refs.emplace_back(base + ".shortcut.w", &b.shortcut.w);
  }
  for (std::size_t t = 0; t < params.decoders.size(); ++t) {
    refs.emplace_back("dec" + std::to_string(t) + ".w", &params.decoders[t].w);
    refs.emplace_back("dec" + std::to_string(t) + ".b", &params.decoders[t].b);
  }
  refs.emplace_back("head.w", &params.head.w);
  refs.emplace_back("head.b", &params.head.b);
  return refs;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z = params;
  for (auto& [name, mat] : parameter_refs(z)) mat->setZero();
  return z;
}

ScenePyramid build_pyramid(const PointCloud& cloud, const NetworkConfig& cfg,
                           const std::vector<KernelPrior>& priors, int threads) {
  cfg.validate();
  validate_cloud(cloud);
  if (cloud.points.empty()) throw std::invalid_argument("build_pyramid: empty cloud");
  if (priors.size() != cfg.kernels.size()) {
    throw std::invalid_argument("build_pyramid: prior count does not match the config");
  }

  ScenePyramid pyr;
  const int m0 = static_cast<int>(cloud.size());
  if (cloud.has_features()) {
    if (cloud.features.cols() != cfg.input_channels) {
      throw std::invalid_argument("build_pyramid: cloud feature width != config input_channels");
    }
    pyr.input_features = cloud.features;
  } else {
    pyr.input_features = Eigen::MatrixXd::Ones(m0, cfg.input_channels);
  }
  pyr.labels = cloud.labels;

  pyr.levels.resize(cfg.depth);
  const int kk = static_cast<int>(priors.size());
  for (int l = 0; l < cfg.depth; ++l) {
    PyramidLevel& lv = pyr.levels[l];
    if (l == 0) {
      lv.cloud.points = cloud.points;
    } else {
      GridSubsampleResult sub = grid_subsample_detail(pyr.levels[l - 1].cloud, cfg.cell(l));
      lv.cloud.points = std::move(sub.cloud.points);
      lv.sources = std::move(sub.sources);
    }
    const int m = static_cast<int>(lv.cloud.size());
    const double r = cfg.radius(l);
    const SpatialHashGrid grid(lv.cloud.points, r);
    lv.neighbors.resize(m);
    lv.sim.assign(kk, std::vector<std::shared_ptr<const ShortestDistanceMatrix>>(m));
    std::vector<HpcLayerParams> probes;
    for (int k = 0; k < kk; ++k) probes.push_back(matrix_probe(cfg, priors[k], l));
    parallel_for_items(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
      Neighborhood& nb = lv.neighbors[i];
      nb.center = lv.cloud.points[i];
      nb.radius = r;
      nb.indices = grid.radius_query(nb.center, r);
      std::vector<Point3> offsets;
      offsets.reserve(nb.indices.size());
      for (int idx : nb.indices) offsets.push_back(lv.cloud.points[idx] - nb.center);
      for (int k = 0; k < kk; ++k) {
        lv.sim[k][i] =
            std::make_shared<const ShortestDistanceMatrix>(build_layer_matrix(probes[k], offsets));
      }
    });
  }
  for (int l = 0; l + 1 < cfg.depth; ++l) {
    PyramidLevel& lv = pyr.levels[l];
    const SpatialHashGrid grid(pyr.levels[l + 1].cloud.points, cfg.cell(l + 1));
    lv.nearest_coarser.resize(lv.cloud.size());
    parallel_for_items(lv.cloud.size(), threads, [&](std::size_t i) {
      lv.nearest_coarser[i] = grid.nearest(lv.cloud.points[i]);
    });
  }
  return pyr;
}

std::vector<Eigen::MatrixXd> encoder_forward(const NetworkParams& params, const ScenePyramid& pyr,
                                             ForwardTrace* trace, int threads) {
  if (static_cast<int>(pyr.levels.size()) != params.cfg.depth) {
    throw std::invalid_argument("encoder_forward: pyramid depth does not match the config");
  }
  if (pyr.input_features.cols() != params.cfg.in_dim(0)) {
    throw std::invalid_argument("encoder_forward: input feature width does not match the config");
  }
  for (const PyramidLevel& lv : pyr.levels) {
    if (lv.sim.size() != params.priors.size()) {
      throw std::invalid_argument("encoder_forward: pyramid kernel count does not match");
    }
    for (std::size_t k = 0; k < lv.sim.size(); ++k) {
      if (!lv.cloud.points.empty() && lv.sim[k][0]->rows != params.priors[k].size()) {
        throw std::invalid_argument("encoder_forward: pyramid kernel size does not match");
      }
    }
  }
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.blocks.assign(params.blocks.size(), {});
  std::vector<Eigen::MatrixXd> outs(params.blocks.size());
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    const Eigen::MatrixXd input =
        l == 0 ? pyr.input_features : pool_to_level(pyr.levels[l], outs[l - 1]);
    block_forward(params.blocks[l], pyr.levels[l], input, params.cfg.f, threads, tr.blocks[l]);
    outs[l] = tr.blocks[l].out;
  }
  return outs;
}

Eigen::MatrixXd decoder_forward(const NetworkParams& params, const ScenePyramid& pyr,
                                const std::vector<Eigen::MatrixXd>& encoder_out,
                                ForwardTrace* trace) {
  const int depth = params.cfg.depth;
  if (static_cast<int>(encoder_out.size()) != depth) {
    throw std::invalid_argument("decoder_forward: need one feature matrix per level");
  }
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.dec_in.assign(depth > 0 ? depth - 1 : 0, {});
  tr.dec_out.assign(depth > 0 ? depth - 1 : 0, {});
  Eigen::MatrixXd current = encoder_out[depth - 1];
  for (int t = depth - 2; t >= 0; --t) {
    const PyramidLevel& lv = pyr.levels[t];
    const Eigen::Index m = static_cast<Eigen::Index>(lv.cloud.size());
    Eigen::MatrixXd cat(m, current.cols() + encoder_out[t].cols());
    for (Eigen::Index i = 0; i < m; ++i) {
      cat.row(i).head(current.cols()) = current.row(lv.nearest_coarser[i]);
    }
    cat.rightCols(encoder_out[t].cols()) = encoder_out[t];
    const LinearParams& dec = params.decoders[t];
    Eigen::MatrixXd pre = cat * dec.w + dec.b.replicate(m, 1);
    tr.dec_in[t] = std::move(cat);
    tr.dec_out[t] = relu(pre);
    current = tr.dec_out[t];
  }
  return current;
}

Eigen::MatrixXd segmentation_head(const LinearParams& head, const Eigen::MatrixXd& features) {
  return features * head.w + head.b.replicate(features.rows(), 1);
}

Eigen::MatrixXd network_forward(const NetworkParams& params, const ScenePyramid& pyr,
                                ForwardTrace* trace, int threads) {
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  const std::vector<Eigen::MatrixXd> enc = encoder_forward(params, pyr, &tr, threads);
  const Eigen::MatrixXd feat = decoder_forward(params, pyr, enc, &tr);
  tr.logits = segmentation_head(params.head, feat);
  return tr.logits;
}

LossResult cross_entropy_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("cross_entropy_loss: one label per logit row required");
  }
  const int classes = static_cast<int>(logits.cols());
  LossResult res;
  res.d_logits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (int y : labels) {
    if (y >= classes) throw std::invalid_argument("cross_entropy_loss: label id >= class count");
    if (y >= 0) ++res.labeled;
  }
  if (res.labeled == 0) return res;

  const double inv_m = 1.0 / static_cast<double>(res.labeled);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    const Eigen::RowVectorXd row = logits.row(i);
    const double top = row.maxCoeff();
    const Eigen::RowVectorXd shifted = (row.array() - top).exp();
    const double z = shifted.sum();
    res.loss += (std::log(z) + top - row(y)) * inv_m;
    res.d_logits.row(i) = shifted * (inv_m / z);
    res.d_logits(i, y) -= inv_m;
  }
  return res;
}

NetworkParams network_backward(const NetworkParams& params, const ScenePyramid& pyr,
                               const ForwardTrace& trace, const Eigen::MatrixXd& d_logits,
                               int threads) {
  const int depth = params.cfg.depth;
  if (static_cast<int>(trace.blocks.size()) != depth) {
    throw ContractError("network_backward: trace does not match the network depth");
  }
  NetworkParams g = zeros_like(params);

  // Head.
  const Eigen::MatrixXd& head_in = depth == 1 ? trace.blocks[0].out : trace.dec_out[0];
  g.head.w += head_in.transpose() * d_logits;
  g.head.b += d_logits.colwise().sum();
  Eigen::MatrixXd d_current = d_logits * params.head.w.transpose();

  // Decoder chain, fine to coarse; d_enc collects skip gradients.
  std::vector<Eigen::MatrixXd> d_enc(depth);
  for (int l = 0; l < depth; ++l) {
    d_enc[l] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pyr.levels[l].cloud.size()),
                                     params.cfg.out_dim(l));
  }
  for (int t = 0; t <= depth - 2; ++t) {
    const PyramidLevel& lv = pyr.levels[t];
    const Eigen::MatrixXd d_pre = relu_mask(trace.dec_out[t], d_current);
    const LinearParams& dec = params.decoders[t];
    g.decoders[t].w += trace.dec_in[t].transpose() * d_pre;
    g.decoders[t].b += d_pre.colwise().sum();
    const Eigen::MatrixXd d_cat = d_pre * dec.w.transpose();
    const Eigen::Index coarse_cols = d_cat.cols() - params.cfg.out_dim(t);
    Eigen::MatrixXd d_coarse = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(pyr.levels[t + 1].cloud.size()), coarse_cols);
    for (Eigen::Index i = 0; i < d_cat.rows(); ++i) {
      d_coarse.row(lv.nearest_coarser[i]) += d_cat.row(i).head(coarse_cols);
    }
    d_enc[t] += d_cat.rightCols(params.cfg.out_dim(t));
    d_current = std::move(d_coarse);
  }
  if (depth == 1) {
    d_enc[0] = d_current;
  } else {
    d_enc[depth - 1] += d_current;
  }

  // Encoder blocks, coarse to fine; pooled-input gradients flow down a level.
  for (int l = depth - 1; l >= 0; --l) {
    const Eigen::MatrixXd d_input = block_backward(params.blocks[l], g.blocks[l], pyr.levels[l],
                                                   trace.blocks[l], d_enc[l], params.cfg.f,
                                                   threads);
    if (l == 0) break;
    const PyramidLevel& lv = pyr.levels[l];
    for (std::size_t i = 0; i < lv.sources.size(); ++i) {
      const double w = 1.0 / static_cast<double>(lv.sources[i].size());
      for (int s : lv.sources[i]) {
        d_enc[l - 1].row(s) += w * d_input.row(static_cast<Eigen::Index>(i));
      }
    }
  }
  return g;
}

void sgd_step(NetworkParams& params, NetworkParams& velocity, const NetworkParams& grads,
              double lr, double momentum) {
  auto p = parameter_refs(params);
  auto v = parameter_refs(velocity);
  auto g = parameter_refs(const_cast<NetworkParams&>(grads));
  if (p.size() != v.size() || p.size() != g.size()) {
    throw ContractError("sgd_step: parameter/velocity/gradient layouts disagree");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i].second->rows() != p[i].second->rows() || g[i].second->cols() != p[i].second->cols()) {
      throw ContractError("sgd_step: parameter/velocity/gradient layouts disagree");
    }
    Eigen::MatrixXd& vel = *v[i].second;
    vel = momentum * vel - lr * (*g[i].second);
    *p[i].second += vel;
  }
}

double learning_rate(double base_lr, int epoch, int total_epochs) {
  if (total_epochs <= 0) return base_lr;
  const int drops = static_cast<int>((5ll * epoch) / total_epochs);
  return base_lr * std::pow(0.5, drops);
}

namespace {

void accumulate_confusion(Eigen::MatrixXi& confusion, const Eigen::MatrixXd& logits,
                          const std::vector<int>& labels) {
  const int classes = static_cast<int>(confusion.rows());
  const std::vector<int> pred = predict_labels(logits);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0) continue;
    if (y >= classes) throw std::invalid_argument("label id >= class count");
    ++confusion(y, pred[i]);
  }
}

}  // namespace

TrainResult train(const NetworkConfig& cfg, const std::vector<PointCloud>& dataset,
                  const TrainOptions& opts) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (opts.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

  Rng rng(opts.seed);
  TrainResult result;
  result.state.params = init_network_impl(cfg, rng);
  result.state.velocity = zeros_like(result.state.params);
  NetworkParams& params = result.state.params;

  std::vector<ScenePyramid> pyramids;
  pyramids.reserve(dataset.size());
  for (const PointCloud& scene : dataset) {
    pyramids.push_back(build_pyramid(scene, cfg, params.priors, opts.threads));
    const auto& labels = pyramids.back().labels;
    if (std::none_of(labels.begin(), labels.end(), [](int y) { return y >= 0; })) {
      throw std::invalid_argument("train: dataset contains a scene without labels");
    }
  }

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = learning_rate(opts.lr, epoch, opts.epochs);
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(cfg.classes, cfg.classes);
    double loss_sum = 0.0;
    for (const ScenePyramid& pyr : pyramids) {
      ForwardTrace trace;
      const Eigen::MatrixXd logits = network_forward(params, pyr, &trace, opts.threads);
      const LossResult loss = cross_entropy_loss(logits, pyr.labels);
      accumulate_confusion(confusion, logits, pyr.labels);
      loss_sum += loss.loss;
      const NetworkParams grads =
          network_backward(params, pyr, trace, loss.d_logits, opts.threads);
      sgd_step(params, result.state.velocity, grads, lr, opts.momentum);
    }
    result.state.epoch = epoch + 1;
    const EvalResult summary = iou_from_confusion(confusion);
    MetricRow row;
    row.epoch = epoch + 1;
    row.loss = loss_sum / static_cast<double>(pyramids.size());
    row.miou = summary.miou;
    if (opts.log_wall_time) {
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    result.log.push_back(row);
    if (opts.target_accuracy > 0.0 && summary.accuracy >= opts.target_accuracy) break;
  }

  std::ostringstream state;
  state << rng.engine();
  result.state.rng_state = state.str();
  return result;
}

EvalResult iou_from_confusion(const Eigen::MatrixXi& confusion) {
  const int classes = static_cast<int>(confusion.rows());
  EvalResult res;
  res.confusion = confusion;
  res.class_iou.assign(classes, -1.0);
  double iou_sum = 0.0;
  int counted = 0;
  std::int64_t correct = 0;
  for (int c = 0; c < classes; ++c) {
    const std::int64_t tp = confusion(c, c);
    const std::int64_t fp = confusion.col(c).sum() - tp;
    const std::int64_t fn = confusion.row(c).sum() - tp;
    correct += tp;
    if (tp + fp + fn == 0) continue;  // class absent from truth and prediction
    res.class_iou[c] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    iou_sum += res.class_iou[c];
    ++counted;
  }
  res.labeled = confusion.sum();
  res.miou = counted > 0 ? iou_sum / counted : 0.0;
  res.accuracy = res.labeled > 0 ? static_cast<double>(correct) / res.labeled : 0.0;
  return res;
}

EvalResult evaluate(const NetworkParams& params, const std::vector<ScenePyramid>& pyramids,
                    int threads) {
  if (pyramids.empty()) throw std::invalid_argument("evaluate: empty dataset");
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(params.cfg.classes, params.cfg.classes);
  for (const ScenePyramid& pyr : pyramids) {
    const Eigen::MatrixXd logits = network_forward(params, pyr, nullptr, threads);
    accumulate_confusion(confusion, logits, pyr.labels);
  }
  if (confusion.sum() == 0) throw std::invalid_argument("evaluate: no labeled points");
  return iou_from_confusion(confusion);
}

EvalResult evaluate(const NetworkParams& params, const std::vector<PointCloud>& dataset,
                    int threads) {
  std::vector<ScenePyramid> pyramids;
  pyramids.reserve(dataset.size());
  for (const PointCloud& scene : dataset) {
    pyramids.push_back(build_pyramid(scene, params.cfg, params.priors, threads));
  }
  return evaluate(params, pyramids, threads);
}

std::vector<int> predict_labels(const Eigen::MatrixXd& logits) {
  std::vector<int> pred(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    pred[static_cast<std::size_t>(i)] = best;
  }
  return pred;
}

}  // namespace hpc
