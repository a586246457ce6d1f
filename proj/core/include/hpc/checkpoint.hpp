// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "hpc/layer.hpp"
#include "hpc/network.hpp"

namespace hpc {

// "HPCW" records are little-endian: magic, version u32, then n, c_in, c_out,
// f enum, kernel-shape enum (u32 each), then n*c_in*c_out row-major doubles.
// A network checkpoint wraps one JSON metadata blob plus named records, one
// per tensor stack; linear tensors use the shape sentinel below.
inline constexpr std::uint32_t kLayerFormatVersion = 1;
inline constexpr std::uint32_t kNetworkFormatVersion = 2;
inline constexpr std::uint32_t kLinearShapeId = 255;

void save_layer_weights(const std::string& path, const HpcLayerParams& params);

/// Rebuilds the canonical prior for the stored shape and point count. Radius
/// and matrix mode are not part of the format and keep their defaults.
HpcLayerParams load_layer_weights(const std::string& path);

void save_network_checkpoint(const std::string& path, const TrainState& state);
TrainState load_network_checkpoint(const std::string& path);

}  // namespace hpc
