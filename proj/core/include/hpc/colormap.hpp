// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace hpc {

/// Viridis colormap sample. t is clamped to [0, 1]; interpolates a 32-anchor
/// table of the standard map.
std::array<std::uint8_t, 3> viridis(double t);

}  // namespace hpc
