// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0

#include "hpc/colormap.hpp"

#include <algorithm>
#include <cmath>

namespace hpc {

namespace {

// 32 evenly spaced anchors of the matplotlib viridis map.
constexpr std::array<std::array<std::uint8_t, 3>, 32> kViridis{{
    {68, 1, 84},    {71, 13, 96},   {72, 24, 106},  {72, 35, 116},  {71, 46, 124},
    {69, 56, 130},  {66, 65, 134},  {62, 74, 137},  {58, 84, 140},  {54, 93, 141},
    {50, 101, 142}, {46, 109, 142}, {43, 117, 142}, {40, 125, 142}, {37, 132, 142},
    {34, 140, 141}, {31, 148, 140}, {30, 156, 137}, {32, 163, 134}, {37, 171, 130},
    {46, 179, 124}, {58, 186, 118}, {72, 193, 110}, {88, 199, 101}, {108, 205, 90},
    {127, 211, 78}, {147, 215, 65}, {168, 219, 52}, {192, 223, 37}, {213, 226, 26},
    {234, 229, 26}, {253, 231, 37},
}};

}  // namespace

std::array<std::uint8_t, 3> viridis(double t) {
  if (!(t >= 0.0)) t = 0.0;  // also catches NaN
  if (t > 1.0) t = 1.0;
  const double x = t * (kViridis.size() - 1);
  const int lo = static_cast<int>(std::floor(x));
  const int hi = std::min<int>(lo + 1, kViridis.size() - 1);
  const double frac = x - lo;
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double v = (1.0 - frac) * kViridis[lo][c] + frac * kViridis[hi][c];
    out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return out;
}

}  // namespace hpc
