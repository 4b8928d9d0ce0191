// Copyright 2026 The usqz Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small fixtures shared by the unit tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "usqz/grid.hpp"
#include "usqz/random.hpp"

namespace usqz::testing {

inline ProbeGeometry small_geometry(int nt = 64, int nr = 96) {
  ProbeGeometry g;
  g.num_scan_lines = nt;
  g.samples_per_line = nr;
  g.cart_width = 2 * nr;
  g.cart_height = 2 * nr;
  return g;
}

inline LabelMap ring_labels(const ProbeGeometry& g, int lumen, int media) {
  ContourSet set{{{kLumen, std::vector<int>(g.num_scan_lines, lumen)},
                  {kMedia, std::vector<int>(g.num_scan_lines, media)}}};
  return rasterize_contours(set, g);
}

// 3x3 box filter, wrapping in theta and clamped in r.
inline PolarFrame box3(const PolarFrame& f) {
  PolarFrame out = f;
  const int nr = f.geometry.samples_per_line;
  const int nt = f.geometry.num_scan_lines;
  for (int r = 0; r < nr; ++r) {
    for (int t = 0; t < nt; ++t) {
      int sum = 0, n = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= nr) continue;
        for (int dt = -1; dt <= 1; ++dt) {
          sum += f.samples(rr, ((t + dt) % nt + nt) % nt);
          ++n;
        }
      }
      out.samples(r, t) = static_cast<std::uint8_t>((sum + n / 2) / n);
    }
  }
  return out;
}

// Rotates every column of a polar array by k scan lines.
template <typename T>
Array2D<T> rotate_theta(const Array2D<T>& a, int k) {
  Array2D<T> out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int t = 0; t < a.cols(); ++t) out(r, (t + k) % a.cols()) = a(r, t);
  return out;
}

// The contour set stored in tests/golden/two_rings.usqz.
inline ContourSet golden_contours() {
  ContourSet set;
  std::vector<int> lumen(256), media(256);
  for (int t = 0; t < 256; ++t) {
    lumen[t] = 100 + static_cast<int>(std::lround(12.0 * std::sin(2.0 * std::numbers::pi * t / 256.0)));
    media[t] = lumen[t] + 40 + (t % 64 < 32 ? t % 32 : 32 - t % 32) / 4;
  }
  set.boundaries = {{kLumen, make_encodable(lumen, {}, 383)}, {kMedia, {}}};
  set.boundaries[1].radii = make_encodable(media, set.boundaries[0].radii, 383);
  return set;
}

}  // namespace usqz::testing
