// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hpc/config.hpp"

namespace hpc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

constexpr char kMagic[4] = {'H', 'P', 'C', 'W'};

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::string& out, double v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  double f64() {
    double v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  std::string bytes(std::size_t count) { return std::string(take(count), count); }

  void expect_magic() {
    const char* p = take(4);
    if (std::memcmp(p, kMagic, 4) != 0) {
      throw std::runtime_error(path_ + ": bad magic, expected HPCW");
    }
  }
  void expect_done() const {
    if (pos_ != data_.size()) {
      throw std::runtime_error(path_ + ": trailing bytes after checkpoint data");
    }
  }
  const std::string& path() const { return path_; }

 private:
  const char* take(std::size_t count) {
    if (data_.size() - pos_ < count) throw std::runtime_error(path_ + ": truncated checkpoint");
    const char* p = data_.data() + pos_;
    pos_ += count;
    return p;
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

Reader open_reader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Reader(std::move(data), path);
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// One tensor stack = one named record in a network checkpoint.
struct StackRef {
  std::string name;
  std::vector<Eigen::MatrixXd*> slices;
  DistributiveFn f = DistributiveFn::Sum;
  std::uint32_t shape_id = kLinearShapeId;
};

std::vector<StackRef> tensor_stacks(NetworkParams& p) {
  std::vector<StackRef> stacks;
  auto add_linear = [&](const std::string& name, Eigen::MatrixXd& m) {
    stacks.push_back({name, {&m}, DistributiveFn::Sum, kLinearShapeId});
  };
  for (std::size_t l = 0; l < p.blocks.size(); ++l) {
    EncoderBlock& b = p.blocks[l];
    const std::string base = "enc" + std::to_string(l);
    auto add_conv = [&](MultiKernelParams& conv, const char* tag) {
      for (std::size_t k = 0; k < conv.kernels.size(); ++k) {
        HpcLayerParams& layer = conv.kernels[k];
        StackRef ref;
        ref.name = base + ".k" + std::to_string(k) + "." + tag;
        for (auto& w : layer.weights) ref.slices.push_back(&w);
        ref.f = layer.f;
        ref.shape_id = static_cast<std::uint32_t>(layer.kernel.shape);
        stacks.push_back(std::move(ref));
      }
    };
    add_conv(b.conv1, "conv1");
    add_conv(b.conv2, "conv2");
    if (b.has_shortcut()) add_linear(base + ".shortcut", b.shortcut.w);
  }
  for (std::size_t t = 0; t < p.decoders.size(); ++t) {
    add_linear("dec" + std::to_string(t) + ".w", p.decoders[t].w);
    add_linear("dec" + std::to_string(t) + ".b", p.decoders[t].b);
  }
  add_linear("head.w", p.head.w);
  add_linear("head.b", p.head.b);
  return stacks;
}

void append_record(std::string& out, const std::vector<Eigen::MatrixXd*>& slices,
                   DistributiveFn f, std::uint32_t shape_id) {
  out.append(kMagic, 4);
  put_u32(out, kLayerFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(slices.size()));
  put_u32(out, static_cast<std::uint32_t>(slices[0]->rows()));
  put_u32(out, static_cast<std::uint32_t>(slices[0]->cols()));
  put_u32(out, static_cast<std::uint32_t>(f));
  put_u32(out, shape_id);
  for (const Eigen::MatrixXd* w : slices) {
    for (Eigen::Index r = 0; r < w->rows(); ++r) {
      for (Eigen::Index c = 0; c < w->cols(); ++c) put_f64(out, (*w)(r, c));
    }
  }
}

struct Record {
  std::vector<Eigen::MatrixXd> slices;
  DistributiveFn f = DistributiveFn::Sum;
  std::uint32_t shape_id = 0;
};

Record read_record(Reader& r) {
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version != kLayerFormatVersion) {
    throw std::runtime_error(r.path() + ": unsupported HPCW record version " +
                             std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint32_t f_id = r.u32();
  Record rec;
  rec.shape_id = r.u32();
  if (n == 0 || rows == 0 || cols == 0) {
    throw std::runtime_error(r.path() + ": empty weight record");
  }
  if (f_id > 2) throw std::runtime_error(r.path() + ": unknown distributive function id");
  rec.f = static_cast<DistributiveFn>(f_id);
  rec.slices.reserve(n);
  for (std::uint32_t j = 0; j < n; ++j) {
    Eigen::MatrixXd w(rows, cols);
    for (std::uint32_t a = 0; a < rows; ++a) {
      for (std::uint32_t b = 0; b < cols; ++b) w(a, b) = r.f64();
    }
    rec.slices.push_back(std::move(w));
  }
  return rec;
}

void fill_from_record(const StackRef& dst, Record rec, const std::string& path) {
  if (rec.slices.size() != dst.slices.size() || rec.shape_id != dst.shape_id ||
      rec.slices[0].rows() != dst.slices[0]->rows() ||
      rec.slices[0].cols() != dst.slices[0]->cols()) {
    throw std::runtime_error(path + ": record \"" + dst.name +
                             "\" does not match the configured network layout");
  }
  for (std::size_t j = 0; j < dst.slices.size(); ++j) *dst.slices[j] = std::move(rec.slices[j]);
}

}  // namespace

void save_layer_weights(const std::string& path, const HpcLayerParams& params) {
  if (params.weights.empty()) throw std::invalid_argument("save_layer_weights: empty weights");
  std::string out;
  std::vector<Eigen::MatrixXd*> slices;
  for (const auto& w : params.weights) slices.push_back(const_cast<Eigen::MatrixXd*>(&w));
  append_record(out, slices, params.f, static_cast<std::uint32_t>(params.kernel.shape));
  write_file(path, out);
}

HpcLayerParams load_layer_weights(const std::string& path) {
  Reader r = open_reader(path);
  Record rec = read_record(r);
  r.expect_done();
  if (rec.shape_id > 3) {
    throw std::runtime_error(path + ": record holds a linear tensor, not layer weights");
  }
  HpcLayerParams params;
  params.f = rec.f;
  params.kernel =
      generate_kernel(static_cast<KernelShape>(rec.shape_id), static_cast<int>(rec.slices.size()));
  params.weights = std::move(rec.slices);
  if (params.kernel.size() != params.n()) {
    throw std::runtime_error(path + ": slice count impossible for the stored kernel shape");
  }
  return params;
}

void save_network_checkpoint(const std::string& path, const TrainState& state) {
  nlohmann::json meta;
  meta["config"] = nlohmann::json::parse(network_config_to_json(state.params.cfg));
  meta["epoch"] = state.epoch;
  meta["rng"] = state.rng_state;
  const bool has_velocity = !state.velocity.blocks.empty();
  meta["velocity"] = has_velocity;
  const std::string meta_str = meta.dump();

  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kNetworkFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
  out += meta_str;

  auto& params = const_cast<NetworkParams&>(state.params);
  std::vector<StackRef> stacks = tensor_stacks(params);
  std::vector<StackRef> vstacks;
  if (has_velocity) {
    vstacks = tensor_stacks(const_cast<NetworkParams&>(state.velocity));
    for (auto& s : vstacks) s.name += ".v";
  }
  put_u32(out, static_cast<std::uint32_t>(stacks.size() + vstacks.size()));
  for (const auto& group : {stacks, vstacks}) {
    for (const StackRef& s : group) {
      put_u32(out, static_cast<std::uint32_t>(s.name.size()));
      out += s.name;
      append_record(out, s.slices, s.f, s.shape_id);
    }
  }
  write_file(path, out);
}

TrainState load_network_checkpoint(const std::string& path) {
  Reader r = open_reader(path);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version != kNetworkFormatVersion) {
    throw std::runtime_error(path + ": unsupported HPCW checkpoint version " +
                             std::to_string(version));
  }
  const std::uint32_t meta_len = r.u32();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.bytes(meta_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": bad checkpoint metadata: " + e.what());
  }
  TrainState state;
  NetworkConfig cfg;
  try {
    cfg = network_config_from_json(meta.at("config").dump());
    state.epoch = meta.at("epoch").get<int>();
    state.rng_state = meta.at("rng").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": bad checkpoint metadata: " + e.what());
  }
  const bool has_velocity = meta.value("velocity", false);

  state.params = init_network(cfg, 0);
  std::vector<StackRef> stacks = tensor_stacks(state.params);
  if (has_velocity) {
    state.velocity = zeros_like(state.params);
    for (StackRef s : tensor_stacks(state.velocity)) {
      s.name += ".v";
      stacks.push_back(std::move(s));
    }
  }

  const std::uint32_t count = r.u32();
  if (count != stacks.size()) {
    throw std::runtime_error(path + ": checkpoint holds " + std::to_string(count) +
                             " records, config expects " + std::to_string(stacks.size()));
  }
  for (const StackRef& dst : stacks) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    if (name != dst.name) {
      throw std::runtime_error(path + ": unexpected record \"" + name + "\", wanted \"" +
                               dst.name + "\"");
    }
    fill_from_record(dst, read_record(r), path);
  }
  r.expect_done();
  return state;
}

}  // namespace hpc
