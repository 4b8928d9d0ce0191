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

#include "usqz/speckle_stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "usqz/error.hpp"
#include "usqz/io.hpp"

namespace usqz::speckle {
namespace {

struct Moments {
  double mean = 0.0;
  double omega = 0.0;
  double var_power = 0.0;
};

// Two passes so var(x^2) does not suffer from E[x^4] - E[x^2]^2 cancellation.
template <typename Gather>
Moments window_moments(int count, Gather&& value_at) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < count; ++i) {
    const double x = value_at(i);
    sum += x;
    sum_sq += x * x;
  }
  Moments m;
  m.mean = sum / count;
  m.omega = sum_sq / count;
  double dev = 0.0;
  for (int i = 0; i < count; ++i) {
    const double x = value_at(i);
    const double d = x * x - m.omega;
    dev += d * d;
  }
  m.var_power = dev / count;
  return m;
}

// Rounding leaves a residue of order eps * omega^2 when every sample is equal.
bool is_degenerate(const Moments& m) {
  return !(m.var_power > 1e-12 * m.omega * m.omega);
}

double median(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

NakagamiParams nakagami_fit(std::span<const double> samples) {
  if (samples.size() < kMinFitSamples)
    throw Error(ErrorCode::kDegenerateSample,
                "need at least 8 samples, got " + std::to_string(samples.size()));
  for (double x : samples)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::kInvalidArgument, "amplitudes must be finite and non-negative");
  const Moments m = window_moments(static_cast<int>(samples.size()),
                                   [&](int i) { return samples[static_cast<std::size_t>(i)]; });
  if (is_degenerate(m)) throw Error(ErrorCode::kDegenerateSample, "zero variance of x^2");
  return {m.omega * m.omega / m.var_power, m.omega};
}

FeatureStack feature_map(const PolarFrame& frame, int window, double dynamic_range_db) {
  if (window < 3 || window % 2 == 0)
    throw Error(ErrorCode::kInvalidArgument, "feature window must be odd and >= 3");
  const ProbeGeometry& g = frame.geometry;
  g.validate();
  const int nr = g.samples_per_line;
  const int nt = g.num_scan_lines;
  const int half = window / 2;

  std::array<double, 256> amplitude{};
  for (int v = 0; v < 256; ++v)
    amplitude[v] = synth::inverse_log_compress(static_cast<std::uint8_t>(v), dynamic_range_db);

  FeatureStack stack;
  stack.geometry = g;
  stack.window = window;
  for (auto& c : stack.channels) c = Array2D<double>(nr, nt, 0.0);
  Array2D<std::uint8_t> degenerate(nr, nt, 0);

  auto wrap = [nt](int t) { return ((t % nt) + nt) % nt; };
  const int count = window * window;
  for (int r = 0; r < nr; ++r) {
    for (int t = 0; t < nt; ++t) {
      const Moments m = window_moments(count, [&](int i) {
        const int rr = std::clamp(r + i / window - half, 0, nr - 1);
        const int tt = wrap(t + i % window - half);
        return amplitude[frame.samples(rr, tt)];
      });
      stack.channels[1](r, t) = std::log(m.omega);
      stack.channels[2](r, t) = m.mean;
      if (!is_degenerate(m)) {
        stack.channels[0](r, t) = std::min(m.omega * m.omega / m.var_power, kMaxShape);
      } else {
        degenerate(r, t) = 1;
      }
    }
  }

  // Impute degenerate shapes from valid neighbours in the same window, then
  // from the whole frame, then the cap.
  std::vector<double> frame_valid;
  for (int r = 0; r < nr; ++r)
    for (int t = 0; t < nt; ++t)
      if (!degenerate(r, t)) frame_valid.push_back(stack.channels[0](r, t));
  const double fallback = frame_valid.empty() ? kMaxShape : median(frame_valid);

  std::vector<double> neighbours;
  for (int r = 0; r < nr; ++r) {
    for (int t = 0; t < nt; ++t) {
      if (!degenerate(r, t)) continue;
      neighbours.clear();
      for (int dr = -half; dr <= half; ++dr) {
        for (int dt = -half; dt <= half; ++dt) {
          const int rr = std::clamp(r + dr, 0, nr - 1);
          const int tt = wrap(t + dt);
          if (!degenerate(rr, tt)) neighbours.push_back(stack.channels[0](rr, tt));
        }
      }
      stack.channels[0](r, t) = neighbours.empty() ? fallback : median(neighbours);
    }
  }
  return stack;
}

void write_feature_stack(const std::filesystem::path& base, const FeatureStack& stack) {
  std::vector<std::uint8_t> raw;
  raw.reserve(stack.channels[0].size() * kNumFeatures * 4);
  for (const auto& ch : stack.channels) {
    for (double v : ch.values()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int b = 0; b < 4; ++b) raw.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  std::filesystem::path data = base;
  data += ".f32";
  std::filesystem::path sidecar = base;
  sidecar += ".txt";
  io::write_bytes(data, raw);

  std::string text = "format planar row-major float32 little-endian\n";
  text += "rows " + std::to_string(stack.geometry.samples_per_line) + "\n";
  text += "cols " + std::to_string(stack.geometry.num_scan_lines) + "\n";
  text += "window " + std::to_string(stack.window) + "\n";
  text += "channels " + std::to_string(kNumFeatures);
  for (auto name : kFeatureNames) text += " " + std::string(name);
  text += "\n";
  io::write_text(sidecar, text);
}

}  // namespace usqz::speckle
