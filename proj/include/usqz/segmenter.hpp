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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "usqz/grid.hpp"
#include "usqz/speckle_stats.hpp"

namespace usqz::segment {

using FeatureVector = std::array<double, speckle::kNumFeatures>;

struct ClassModel {
  ClassId id = kLumen;
  std::string name;
  double prior = 0.0;
  FeatureVector mean{};
  FeatureVector variance{};

  bool operator==(const ClassModel&) const = default;
};

/// Diagonal-Gaussian Bayes classifier over speckle features.
struct ClassifierModel {
  int window = 9;
  double dynamic_range_db = synth::kDefaultDynamicRangeDb;
  std::vector<ClassModel> classes;
  // Mean (truth - extracted) radius on the training frames, lumen then media.
  std::array<double, 2> boundary_offset{};

  void validate() const;
  bool operator==(const ClassifierModel&) const = default;
};

/// Variances are floored at this fraction of the feature's pooled variance.
inline constexpr double kVarianceFloor = 1e-6;

/// Pixels labelled background are skipped. Throws kMissingClass when a
/// tissue class never occurs. The boundary offsets are measured by running
/// the extractor on the training stacks.
[[nodiscard]] ClassifierModel train_classifier(std::span<const speckle::FeatureStack> stacks,
                                               std::span<const LabelMap> labels);

struct PosteriorMap {
  ProbeGeometry geometry;
  std::vector<ClassId> class_ids;
  std::vector<Array2D<double>> posteriors;  // one per class, sums to 1 per pixel

  [[nodiscard]] LabelMap argmax() const;
};

[[nodiscard]] PosteriorMap classify(const speckle::FeatureStack& stack,
                                    const ClassifierModel& model);

/// feature_map + classify + argmax with the model's window and dynamic range.
[[nodiscard]] LabelMap segment_frame(const PolarFrame& frame, const ClassifierModel& model);

struct ExtractOptions {
  int majority_width = 5;  // along depth
  int median_width = 9;    // across scan lines, circular
  int pooling_width = 1;   // posterior costs summed over this many scan lines
  std::array<int, 2> boundary_offset{};  // added to lumen and media radii
};

/// Lumen and media boundaries from a label map. Per scan line the labels are
/// majority filtered in depth and the nested lumen/media/external step that
/// disagrees with the fewest labels is chosen; boundaries are then median
/// filtered across scan lines and made nested and chain-code encodable.
/// Throws kTopologyFailure when a scan line has no lumen run.
[[nodiscard]] ContourSet extract_contours(const LabelMap& labels, const ExtractOptions& options = {});

/// As above, but each scan line's step is fitted to the summed negative log
/// posteriors rather than to hard labels.
[[nodiscard]] ContourSet extract_contours(const PosteriorMap& posteriors,
                                          const ExtractOptions& options = {});

/// Re-estimates the class means on one frame by posterior-weighted averaging,
/// starting from `model`. Absorbs per-frame gain and contrast drift.
[[nodiscard]] ClassifierModel adapt_means(const speckle::FeatureStack& stack,
                                          const ClassifierModel& model, int iterations);

inline constexpr int kAdaptIterations = 3;
inline constexpr int kPoolingWidth = 35;

/// Mean adaptation, posterior-based extraction and the model's boundary
/// offsets.
[[nodiscard]] ContourSet frame_contours(const PolarFrame& frame, const ClassifierModel& model);

[[nodiscard]] std::vector<std::uint8_t> serialize_model(const ClassifierModel& model);
[[nodiscard]] ClassifierModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const ClassifierModel& model);
[[nodiscard]] ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace usqz::segment
