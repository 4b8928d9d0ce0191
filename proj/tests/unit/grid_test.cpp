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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "usqz/error.hpp"
#include "usqz/grid.hpp"
#include "usqz/phantom.hpp"
#include "usqz/segmenter.hpp"

using namespace usqz;
using usqz::testing::box3;
using usqz::testing::ring_labels;
using usqz::testing::small_geometry;

namespace {

struct Peak {
  int x = 0;
  int y = 0;
};

Peak brightest(const CartesianFrame& f) {
  Peak p;
  int best = -1;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      if (f.pixels(y, x) > best) best = f.pixels(y, x), p = {x, y};
  return p;
}

bool throws_code(ErrorCode code, const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("geometry validation") {
  ProbeGeometry g;
  CHECK_NOTHROW(g.validate());
  g.num_scan_lines = 7;
  CHECK(throws_code(ErrorCode::kInvalidArgument, [&] { g.validate(); }));
  g = {};
  g.cart_width = 15;
  CHECK(throws_code(ErrorCode::kInvalidArgument, [&] { g.validate(); }));
  g = {};
  g.radial_step_mm = 0.0;
  CHECK(throws_code(ErrorCode::kInvalidArgument, [&] { g.validate(); }));
  g = {};
  g.cart_width = 32;  // clipping is allowed
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("centre pixel is the r=0 ring average") {
  ProbeGeometry g;
  PolarFrame f(g, 0);
  for (int t = 0; t < g.num_scan_lines; ++t) f.samples(0, t) = static_cast<std::uint8_t>(t % 2 ? 200 : 100);
  const auto c = polar_to_cartesian(f);
  CHECK(c.pixels(g.cart_height / 2, g.cart_width / 2) == 150);
  CHECK(c.valid_mask(g.cart_height / 2, g.cart_width / 2) == 1);
}

TEST_CASE("uniform polar frame maps to uniform disc") {
  ProbeGeometry g;
  const auto c = polar_to_cartesian(PolarFrame(g, 128));
  int valid = 0;
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      if (c.valid_mask(y, x)) {
        ++valid;
        REQUIRE(c.pixels(y, x) == 128);
      } else {
        REQUIRE(c.pixels(y, x) == 0);
        const double dx = x - g.cart_width / 2, dy = y - g.cart_height / 2;
        REQUIRE(std::sqrt(dx * dx + dy * dy) > g.samples_per_line - 1);
      }
    }
  }
  // Disc of radius N_r - 1 pixels.
  const double area = std::numbers::pi * 383.0 * 383.0;
  CHECK(std::abs(valid - area) / area < 0.01);
}

TEST_CASE("impulse lands at the documented orientation") {
  ProbeGeometry g;
  PolarFrame up(g, 0);
  up.samples(100, 0) = 255;
  Peak p = brightest(polar_to_cartesian(up));
  CHECK(std::abs(p.x - g.cart_width / 2) <= 1);
  CHECK(std::abs(p.y - (g.cart_height / 2 - 100)) <= 1);

  // A quarter turn counterclockwise from up points left.
  PolarFrame left(g, 0);
  left.samples(100, g.num_scan_lines / 4) = 255;
  p = brightest(polar_to_cartesian(left));
  CHECK(std::abs(p.x - (g.cart_width / 2 - 100)) <= 1);
  CHECK(std::abs(p.y - g.cart_height / 2) <= 1);
}

TEST_CASE("uniform Cartesian disc maps to uniform polar frame") {
  ProbeGeometry g;
  CartesianFrame c = polar_to_cartesian(PolarFrame(g, 1));
  for (auto& v : c.pixels.values()) v = v ? 77 : 0;
  const auto p = cartesian_to_polar(c, g);
  CHECK(std::all_of(p.samples.values().begin(), p.samples.values().end(),
                    [](std::uint8_t v) { return v == 77; }));
}

TEST_CASE("cartesian_to_polar rejects a frame of the wrong size") {
  ProbeGeometry g;
  CartesianFrame c = polar_to_cartesian(PolarFrame(g, 1));
  ProbeGeometry other = g;
  other.cart_width = 700;
  CHECK(throws_code(ErrorCode::kGeometryMismatch, [&] { (void)cartesian_to_polar(c, other); }));
}

TEST_CASE("radial gradient round trip") {
  ProbeGeometry g;
  PolarFrame f(g);
  for (int r = 0; r < g.samples_per_line; ++r)
    for (int t = 0; t < g.num_scan_lines; ++t) f.samples(r, t) = static_cast<std::uint8_t>(r * 255 / 383);
  const auto back = cartesian_to_polar(polar_to_cartesian(f), g);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    sum += std::abs(int(back.samples.values()[i]) - int(f.samples.values()[i]));
  CHECK(sum / static_cast<double>(f.samples.size()) <= 2.0);
}

TEST_CASE("impulse round trip keeps the peak within one sample") {
  ProbeGeometry g;
  for (int t : {0, 37, 128, 201}) {
    PolarFrame f(g, 0);
    f.samples(200, t) = 255;
    const auto back = cartesian_to_polar(polar_to_cartesian(f), g);
    int br = 0, bt = 0, best = -1;
    for (int r = 0; r < g.samples_per_line; ++r)
      for (int s = 0; s < g.num_scan_lines; ++s)
        if (back.samples(r, s) > best) best = back.samples(r, s), br = r, bt = s;
    CHECK(std::abs(br - 200) <= 1);
    const int dt = std::min(std::abs(bt - t), g.num_scan_lines - std::abs(bt - t));
    CHECK(dt <= 1);
  }
}

TEST_CASE("band-limited round trip error bounds") {
  // A smoothed speckle frame. The max bound is taken where a ring holds at
  // least one Cartesian pixel per scan line; closer to the centre the
  // Cartesian grid cannot represent N_theta distinct samples.
  const auto items = phantom::generate_dataset(2, {}, 5);
  const PolarFrame f = box3(items[0].original);
  const ProbeGeometry& g = f.geometry;
  const auto back = cartesian_to_polar(polar_to_cartesian(f), g);
  const int r_min = static_cast<int>(std::ceil(g.num_scan_lines / (2.0 * std::numbers::pi)));
  double sum = 0.0;
  int worst = 0;
  for (int r = 0; r < g.samples_per_line; ++r) {
    for (int t = 0; t < g.num_scan_lines; ++t) {
      const int d = std::abs(int(back.samples(r, t)) - int(f.samples(r, t)));
      sum += d;
      if (r >= r_min) worst = std::max(worst, d);
    }
  }
  CHECK(sum / static_cast<double>(f.samples.size()) <= 2.0);
  CHECK(worst <= 16);
}

TEST_CASE("rasterize constant rings") {
  ProbeGeometry g;
  const LabelMap lm = ring_labels(g, 50, 90);
  for (int t = 0; t < g.num_scan_lines; ++t) {
    int counts[3] = {0, 0, 0};
    for (int r = 0; r < g.samples_per_line; ++r) ++counts[lm.labels(r, t)];
    REQUIRE(counts[0] == 50);
    REQUIRE(counts[1] == 40);
    REQUIRE(counts[2] == 294);
  }
}

TEST_CASE("touching contours give a zero-width media band") {
  ProbeGeometry g;
  const LabelMap lm = ring_labels(g, 60, 60);
  for (int t = 0; t < g.num_scan_lines; ++t) {
    REQUIRE(lm.labels(59, t) == kLumen);
    REQUIRE(lm.labels(60, t) == kExternal);
  }
}

TEST_CASE("crossing contours are rejected") {
  ProbeGeometry g = small_geometry();
  ContourSet set{{{kLumen, std::vector<int>(64, 50)}, {kMedia, std::vector<int>(64, 60)}}};
  set.boundaries[1].radii[10] = 40;
  CHECK(throws_code(ErrorCode::kCrossingContours, [&] { (void)rasterize_contours(set, g); }));
  set.boundaries[1].radii.pop_back();
  CHECK(throws_code(ErrorCode::kGeometryMismatch, [&] { (void)rasterize_contours(set, g); }));
}

TEST_CASE("rasterize then re-extract stays within one sample") {
  const auto items = phantom::generate_dataset(3, {}, 11);
  for (const auto& item : items) {
    ContourSet truth = item.phantom.contours;
    const LabelMap lm = rasterize_contours(truth, item.phantom.labels.geometry);
    // The circular median may shave extrema narrower than half its width.
    const ContourSet got = segment::extract_contours(lm);
    int exact = 0;
    for (std::size_t b = 0; b < 2; ++b) {
      for (int t = 0; t < lm.geometry.num_scan_lines; ++t) {
        REQUIRE(std::abs(got.boundaries[b].radii[t] - truth.boundaries[b].radii[t]) <= 1);
        exact += got.boundaries[b].radii[t] == truth.boundaries[b].radii[t];
      }
    }
    CHECK(exact >= 0.9 * 2 * lm.geometry.num_scan_lines);
  }
}

TEST_CASE("label resampling never blends class ids") {
  ProbeGeometry g;
  const auto items = phantom::generate_dataset(2, {}, 3);
  const auto cart = labels_to_cartesian(items[0].phantom.labels);
  std::set<int> seen(cart.values().begin(), cart.values().end());
  for (int v : seen) CHECK((v == kLumen || v == kMedia || v == kExternal || v == kBackground));
  CHECK(seen.size() == 4);
}

TEST_CASE("make_encodable output is feasible and nested") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 64;
    std::vector<int> lower(n), target(n);
    for (int t = 0; t < n; ++t) {
      lower[t] = 40 + static_cast<int>(10 * std::sin(2 * std::numbers::pi * t / n));
      target[t] = lower[t] + rng.uniform_int(-5, 30);
    }
    const auto lo = make_encodable(lower, {}, 95);
    const auto out = make_encodable(target, lo, 95);
    ContourSet set{{{kLumen, lo}, {kMedia, out}}};
    REQUIRE(satisfies_contour_invariants(set, small_geometry()));
  }
}

TEST_CASE("make_encodable leaves encodable input alone") {
  std::vector<int> r(64);
  for (int t = 0; t < 64; ++t) r[t] = 50 + (t < 32 ? t / 2 : (64 - t) / 2);
  CHECK(make_encodable(r, {}, 95) == r);
}

}  // TEST_SUITE
