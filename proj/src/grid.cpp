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

#include "usqz/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "usqz/error.hpp"

namespace usqz {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Scan-line angle of a Cartesian offset: counterclockwise from +y (up) with
// image rows growing downward.
double angle_of(double dx, double dy) {
  double theta = std::atan2(-dx, -dy);
  if (theta < 0.0) theta += kTwoPi;
  return theta;
}

}  // namespace

bool is_tissue_class(ClassId id) noexcept {
  return std::any_of(kClassTable.begin(), kClassTable.end(),
                     [id](const ClassInfo& c) { return c.id == id; });
}

std::string_view class_name(ClassId id) noexcept {
  for (const auto& c : kClassTable)
    if (c.id == id) return c.name;
  return id == kBackground ? "background" : "unknown";
}

void ProbeGeometry::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (num_scan_lines < 8) fail("num_scan_lines must be >= 8");
  if (samples_per_line < 8) fail("samples_per_line must be >= 8");
  if (cart_width < 16 || cart_height < 16) fail("Cartesian frame must be at least 16x16");
  if (!(radial_step_mm > 0.0)) fail("radial_step must be positive");
  if (!(angular_span > 0.0) || angular_span > kTwoPi + 1e-12) fail("angular_span must be in (0, 2pi]");
  if (num_scan_lines > 0xFFFF || samples_per_line > 0xFFFF || cart_width > 0xFFFF ||
      cart_height > 0xFFFF)
    fail("dimensions must fit in 16 bits");
}

bool ProbeGeometry::full_circle() const noexcept {
  return std::abs(angular_span - kTwoPi) < 1e-12;
}

bool satisfies_contour_invariants(const ContourSet& contours, const ProbeGeometry& geometry) {
  const int n = geometry.num_scan_lines;
  const std::vector<int>* inner = nullptr;
  for (const auto& c : contours.boundaries) {
    if (static_cast<int>(c.radii.size()) != n) return false;
    for (int t = 0; t < n; ++t) {
      const int r = c.radii[t];
      if (r < 0 || r > geometry.samples_per_line - 1) return false;
      if (!is_encodable_delta(c.radii[(t + 1) % n] - r)) return false;
      if (inner && (*inner)[t] > r) return false;
    }
    inner = &c.radii;
  }
  return true;
}

CartesianFrame polar_to_cartesian(const PolarFrame& frame) {
  const ProbeGeometry& g = frame.geometry;
  g.validate();
  const int nr = g.samples_per_line;
  const int nt = g.num_scan_lines;
  const bool wrap = g.full_circle();
  const double dtheta = g.angular_step();
  const auto& s = frame.samples;

  // The r = 0 ring is a single physical point shared by every scan line.
  double center = 0.0;
  for (int t = 0; t < nt; ++t) center += s(0, t);
  center /= nt;

  auto sample = [&](int r, int t) -> double { return r == 0 ? center : s(r, t); };

  CartesianFrame out;
  out.width = g.cart_width;
  out.height = g.cart_height;
  out.pixels = Array2D<std::uint8_t>(out.height, out.width, 0);
  out.valid_mask = Array2D<std::uint8_t>(out.height, out.width, 0);
  const double cx = g.cart_width / 2;
  const double cy = g.cart_height / 2;

  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double r = std::sqrt(dx * dx + dy * dy);
      if (r > nr - 1) continue;
      const double tf = angle_of(dx, dy) / dtheta;
      int t0 = static_cast<int>(std::floor(tf));
      double ft = tf - t0;
      int t1 = t0 + 1;
      if (wrap) {
        t0 %= nt;
        t1 %= nt;
      } else {
        if (tf > nt - 1) continue;
        if (t1 > nt - 1) {
          t1 = nt - 1;
          ft = 0.0;
        }
      }
      const int r0 = std::min(static_cast<int>(std::floor(r)), nr - 1);
      const int r1 = std::min(r0 + 1, nr - 1);
      const double fr = r - r0;
      const double v0 = (1.0 - ft) * sample(r0, t0) + ft * sample(r0, t1);
      const double v1 = (1.0 - ft) * sample(r1, t0) + ft * sample(r1, t1);
      out.pixels(y, x) = to_u8((1.0 - fr) * v0 + fr * v1);
      out.valid_mask(y, x) = 1;
    }
  }
  return out;
}

PolarFrame cartesian_to_polar(const CartesianFrame& frame, const ProbeGeometry& geometry) {
  geometry.validate();
  if (frame.width != geometry.cart_width || frame.height != geometry.cart_height)
    throw Error(ErrorCode::kGeometryMismatch, "Cartesian frame size differs from geometry");

  PolarFrame out(geometry);
  const double cx = frame.width / 2;
  const double cy = frame.height / 2;
  const double dtheta = geometry.angular_step();

  for (int t = 0; t < geometry.num_scan_lines; ++t) {
    const double theta = t * dtheta;
    const double ux = -std::sin(theta);
    const double uy = -std::cos(theta);
    for (int r = 0; r < geometry.samples_per_line; ++r) {
      const double x = cx + r * ux;
      const double y = cy + r * uy;
      const int x0 = static_cast<int>(std::floor(x));
      const int y0 = static_cast<int>(std::floor(y));
      const double fx = x - x0;
      const double fy = y - y0;
      double acc = 0.0;
      double wsum = 0.0;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const int xi = x0 + i;
          const int yj = y0 + j;
          const double w = (i ? fx : 1.0 - fx) * (j ? fy : 1.0 - fy);
          if (w <= 0.0 || xi < 0 || yj < 0 || xi >= frame.width || yj >= frame.height) continue;
          if (!frame.valid_mask(yj, xi)) continue;
          acc += w * frame.pixels(yj, xi);
          wsum += w;
        }
      }
      out.samples(r, t) = wsum > 0.0 ? to_u8(acc / wsum) : 0;
    }
  }
  return out;
}

Array2D<ClassId> labels_to_cartesian(const LabelMap& labels) {
  const ProbeGeometry& g = labels.geometry;
  g.validate();
  Array2D<ClassId> out(g.cart_height, g.cart_width, kBackground);
  const double cx = g.cart_width / 2;
  const double cy = g.cart_height / 2;
  const int nt = g.num_scan_lines;
  for (int y = 0; y < g.cart_height; ++y) {
    for (int x = 0; x < g.cart_width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const int r = static_cast<int>(std::lround(std::sqrt(dx * dx + dy * dy)));
      if (r > g.samples_per_line - 1) continue;
      int t = static_cast<int>(std::lround(angle_of(dx, dy) / g.angular_step()));
      if (g.full_circle()) {
        t %= nt;
      } else if (t > nt - 1) {
        continue;
      }
      out(y, x) = labels.labels(r, t);
    }
  }
  return out;
}

LabelMap rasterize_contours(const ContourSet& contours, const ProbeGeometry& geometry,
                            ClassId outer_class) {
  geometry.validate();
  const int nt = geometry.num_scan_lines;
  const int nr = geometry.samples_per_line;
  for (std::size_t k = 0; k < contours.boundaries.size(); ++k) {
    const auto& c = contours.boundaries[k];
    if (static_cast<int>(c.radii.size()) != nt)
      throw Error(ErrorCode::kGeometryMismatch,
                  "contour " + std::to_string(k) + " has " + std::to_string(c.radii.size()) +
                      " radii, expected " + std::to_string(nt));
    for (int t = 0; t < nt; ++t) {
      if (c.radii[t] < 0 || c.radii[t] > nr)
        throw Error(ErrorCode::kRangeViolation, "contour radius out of range");
      if (k > 0 && contours.boundaries[k - 1].radii[t] > c.radii[t])
        throw Error(ErrorCode::kCrossingContours,
                    "boundary " + std::to_string(k - 1) + " crosses boundary " +
                        std::to_string(k) + " on scan line " + std::to_string(t));
    }
  }

  LabelMap out(geometry, outer_class);
  for (int t = 0; t < nt; ++t) {
    int r = 0;
    for (const auto& c : contours.boundaries)
      for (; r < c.radii[t]; ++r) out.labels(r, t) = c.class_id;
  }
  return out;
}

namespace {

// Dynamic program over radius offsets within +-band of the target, for one
// fixed start radius. Returns the cost, or -1 when infeasible.
long long encodable_path(std::span<const int> target, std::span<const int> lower, int upper,
                         int start, int band, std::vector<int>* path) {
  const int n = static_cast<int>(target.size());
  const int width = 2 * band + 1;
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  auto lo_at = [&](int t) { return lower.empty() ? 0 : lower[t]; };
  auto allowed = [&](int t, int x) { return x >= lo_at(t) && x <= upper; };

  std::vector<long long> cost(width, kInf);
  std::vector<std::int8_t> parent(static_cast<std::size_t>(n) * width, -1);
  {
    const int d = start - target[0];
    if (d < -band || d > band || !allowed(0, start)) return -1;
    cost[d + band] = std::abs(d);
  }
  std::vector<long long> next(width);
  for (int t = 1; t < n; ++t) {
    std::fill(next.begin(), next.end(), kInf);
    for (int j = 0; j < width; ++j) {
      const int x = target[t] + j - band;
      if (!allowed(t, x)) continue;
      for (int step = kMinMoveDelta; step <= kMaxMoveDelta; ++step) {
        const int i = x - step - target[t - 1] + band;
        if (i < 0 || i >= width || cost[i] >= kInf) continue;
        const long long c = cost[i] + std::abs(j - band);
        if (c < next[j]) {
          next[j] = c;
          parent[static_cast<std::size_t>(t) * width + j] = static_cast<std::int8_t>(step);
        }
      }
    }
    cost.swap(next);
  }

  long long best = kInf;
  int best_j = -1;
  for (int j = 0; j < width; ++j) {
    const int x = target[n - 1] + j - band;
    if (cost[j] < best && is_encodable_delta(start - x)) {
      best = cost[j];
      best_j = j;
    }
  }
  if (best_j < 0) return -1;
  if (path) {
    path->assign(n, 0);
    int x = target[n - 1] + best_j - band;
    for (int t = n - 1; t >= 0; --t) {
      (*path)[t] = x;
      if (t > 0) x -= parent[static_cast<std::size_t>(t) * width + (x - target[t] + band)];
    }
  }
  return best;
}

}  // namespace

std::vector<int> make_encodable(std::span<const int> radii, std::span<const int> lower, int upper) {
  const int n = static_cast<int>(radii.size());
  if (n == 0) return {};
  if (!lower.empty() && static_cast<int>(lower.size()) != n)
    throw Error(ErrorCode::kInvalidArgument, "lower bound length differs from radii");
  int max_lower = 0;
  for (int v : lower) max_lower = std::max(max_lower, v);
  if (max_lower > upper)
    throw Error(ErrorCode::kInvalidArgument, "lower bound exceeds upper bound");

  std::vector<int> target(radii.begin(), radii.end());
  for (int& v : target) v = std::clamp(v, 0, upper);

  // Widen the search band until a path exists; past 100 samples fall back to
  // a constant path.
  for (int band = 8;; band = std::min(band * 2, 100)) {
    const int spread = std::min(band, 8);
    long long best = -1;
    int best_start = 0;
    for (int k = 0; k <= 2 * spread; ++k) {
      const int start = target[0] + ((k % 2) ? (k + 1) / 2 : -(k / 2));
      const long long c = encodable_path(target, lower, upper, start, band, nullptr);
      if (c >= 0 && (best < 0 || c < best)) {
        best = c;
        best_start = start;
      }
    }
    if (best >= 0) {
      std::vector<int> path;
      encodable_path(target, lower, upper, best_start, band, &path);
      return path;
    }
    if (band == 100) break;
  }
  // Fall back to a constant path at the highest lower bound, which is
  // always encodable.
  return std::vector<int>(n, std::max(max_lower, std::clamp(target[0], max_lower, upper)));
}

int clamp_nesting(ContourSet& contours) {
  int changed = 0;
  for (std::size_t k = 1; k < contours.boundaries.size(); ++k) {
    const auto& inner = contours.boundaries[k - 1].radii;
    auto& outer = contours.boundaries[k].radii;
    for (std::size_t t = 0; t < std::min(inner.size(), outer.size()); ++t) {
      if (outer[t] < inner[t]) {
        outer[t] = inner[t];
        ++changed;
      }
    }
  }
  return changed;
}

}  // namespace usqz
