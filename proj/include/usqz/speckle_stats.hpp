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
#include <filesystem>
#include <span>
#include <string_view>

#include "usqz/array2d.hpp"
#include "usqz/grid.hpp"
#include "usqz/synth.hpp"

namespace usqz::speckle {

/// Nakagami amplitude distribution. m = 1 is Rayleigh (fully developed
/// speckle); omega = E[x^2].
struct NakagamiParams {
  double m = 1.0;
  double omega = 1.0;
};

inline constexpr std::size_t kMinFitSamples = 8;

/// Moment estimates: omega = mean(x^2), m = omega^2 / var(x^2).
/// Throws kDegenerateSample for fewer than 8 samples or zero var(x^2).
[[nodiscard]] NakagamiParams nakagami_fit(std::span<const double> samples);

inline constexpr int kNumFeatures = 3;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "nakagami_m", "log_omega", "mean_amplitude"};

/// Shape estimates are capped here; near-constant windows would otherwise
/// produce unbounded m.
inline constexpr double kMaxShape = 100.0;

struct FeatureStack {
  ProbeGeometry geometry;
  int window = 0;
  std::array<Array2D<double>, kNumFeatures> channels;  // each N_r x N_theta

  [[nodiscard]] std::array<double, kNumFeatures> at(int r, int t) const noexcept {
    return {channels[0](r, t), channels[1](r, t), channels[2](r, t)};
  }
};

/// Sliding-window speckle features on linear amplitude recovered from the
/// log-compressed frame. Windows wrap across scan lines and clamp in depth.
/// Windows with zero variance get the median shape of their valid
/// neighbours.
[[nodiscard]] FeatureStack feature_map(const PolarFrame& frame, int window,
                                       double dynamic_range_db = synth::kDefaultDynamicRangeDb);

/// Writes `<base>.f32` (planar, row-major, little-endian float32) and a
/// `<base>.txt` sidecar naming the dimensions and channels.
void write_feature_stack(const std::filesystem::path& base, const FeatureStack& stack);

}  // namespace usqz::speckle
