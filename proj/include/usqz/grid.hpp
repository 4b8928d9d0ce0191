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

#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "usqz/array2d.hpp"

namespace usqz {

using ClassId = std::uint8_t;

inline constexpr ClassId kLumen = 0;
inline constexpr ClassId kMedia = 1;
inline constexpr ClassId kExternal = 2;
inline constexpr ClassId kBackground = 255;

struct ClassInfo {
  ClassId id;
  std::string_view name;
};

/// Tissue classes ordered inner to outer. Background marks samples that
/// belong to no tissue (catheter dead zone, outside the scanned disc).
inline constexpr std::array<ClassInfo, 3> kClassTable{{
    {kLumen, "lumen"},
    {kMedia, "media"},
    {kExternal, "external"},
}};

[[nodiscard]] bool is_tissue_class(ClassId id) noexcept;
[[nodiscard]] std::string_view class_name(ClassId id) noexcept;

struct ProbeGeometry {
  int num_scan_lines = 256;    // N_theta
  int samples_per_line = 384;  // N_r
  int cart_width = 768;
  int cart_height = 768;
  double radial_step_mm = 0.01;
  double angular_span = 2.0 * std::numbers::pi;

  /// Throws Error(kInvalidArgument) when an invariant is violated.
  void validate() const;
  [[nodiscard]] bool full_circle() const noexcept;
  [[nodiscard]] double angular_step() const noexcept { return angular_span / num_scan_lines; }

  bool operator==(const ProbeGeometry&) const = default;
};

struct PolarFrame {
  ProbeGeometry geometry;
  Array2D<std::uint8_t> samples;  // samples_per_line x num_scan_lines

  PolarFrame() = default;
  explicit PolarFrame(const ProbeGeometry& g, std::uint8_t fill = 0)
      : geometry(g), samples(g.samples_per_line, g.num_scan_lines, fill) {}
};

struct CartesianFrame {
  int width = 0;
  int height = 0;
  Array2D<std::uint8_t> pixels;      // height x width
  Array2D<std::uint8_t> valid_mask;  // 1 inside the scanned disc
};

struct LabelMap {
  ProbeGeometry geometry;
  Array2D<ClassId> labels;  // samples_per_line x num_scan_lines

  LabelMap() = default;
  explicit LabelMap(const ProbeGeometry& g, ClassId fill = kBackground)
      : geometry(g), labels(g.samples_per_line, g.num_scan_lines, fill) {}
};

/// One tissue boundary: radius_fn[t] is the first radial sample outside the
/// class on scan line t.
struct Contour {
  ClassId class_id = kLumen;
  std::vector<int> radii;

  bool operator==(const Contour&) const = default;
};

/// Boundaries ordered inner to outer.
struct ContourSet {
  std::vector<Contour> boundaries;

  bool operator==(const ContourSet&) const = default;
};

/// Chain-code move alphabet: a boundary may step by -1, 0, +1 or +2 samples
/// between adjacent scan lines, including the closing step.
inline constexpr int kMinMoveDelta = -1;
inline constexpr int kMaxMoveDelta = 2;

[[nodiscard]] constexpr bool is_encodable_delta(int delta) noexcept {
  return delta >= kMinMoveDelta && delta <= kMaxMoveDelta;
}

/// True when every radius is in range, every boundary spans the scan lines,
/// boundaries are nested and all circular deltas are encodable.
[[nodiscard]] bool satisfies_contour_invariants(const ContourSet& contours,
                                                const ProbeGeometry& geometry);

[[nodiscard]] CartesianFrame polar_to_cartesian(const PolarFrame& frame);
[[nodiscard]] PolarFrame cartesian_to_polar(const CartesianFrame& frame,
                                            const ProbeGeometry& geometry);

/// Nearest-neighbour scan conversion of a label map; pixels outside the
/// disc are kBackground.
[[nodiscard]] Array2D<ClassId> labels_to_cartesian(const LabelMap& labels);

/// Fills each scan line as inner classes up to their boundary radius and
/// `outer_class` beyond the last one. Throws kCrossingContours if boundaries
/// are not nested.
[[nodiscard]] LabelMap rasterize_contours(const ContourSet& contours,
                                          const ProbeGeometry& geometry,
                                          ClassId outer_class = kExternal);

/// Closest sequence (in L1) to `radii` whose circular steps are encodable,
/// with radii[t] in [lower[t], upper]. Large jumps are spread across
/// neighbouring scan lines. `lower` may be empty (bound 0).
[[nodiscard]] std::vector<int> make_encodable(std::span<const int> radii,
                                              std::span<const int> lower, int upper);

/// Raises each outer boundary to its inner neighbour where they cross.
/// Returns the number of (boundary, scan line) pairs changed.
int clamp_nesting(ContourSet& contours);

}  // namespace usqz
