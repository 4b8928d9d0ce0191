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
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "usqz/grid.hpp"

namespace usqz::metrics {

/// Equal-width bins over [lo, hi); values outside fall into the edge bins.
struct Binning {
  int bins = 64;
  double lo = 0.0;
  double hi = 256.0;

  [[nodiscard]] int bin_of(double v) const noexcept;
  bool operator==(const Binning&) const = default;
};

struct Pmf {
  Binning binning;
  std::vector<double> probabilities;
  std::size_t sample_count = 0;
};

/// Histogram with add-one (Laplace) smoothing before normalization, which
/// keeps every bin positive so KL terms stay finite.
[[nodiscard]] Pmf make_pmf(std::span<const double> values, const Binning& binning = {},
                           bool add_one_smoothing = true);

/// Wraps explicit probabilities; they must be non-negative and sum to 1
/// within 1e-9.
[[nodiscard]] Pmf pmf_from_probabilities(std::vector<double> probabilities,
                                         std::size_t sample_count = 1);

/// Jensen-Shannon divergence in nats, within [0, ln 2]. 0 log 0 is taken as 0.
[[nodiscard]] double js_divergence(const Pmf& p, const Pmf& q);

/// Per tissue class value, indexed by class id (lumen, media, external).
using PerClass = std::array<double, 3>;

struct TissuePairs {
  double lumen_media = 0.0;
  double media_external = 0.0;
  double lumen_external = 0.0;
};

inline constexpr std::size_t kMinRegionPixels = 100;

/// Gathers the samples of `frame` labelled `id`.
[[nodiscard]] std::vector<double> region_values(const PolarFrame& frame, const LabelMap& labels,
                                                ClassId id);

[[nodiscard]] TissuePairs inter_tissue_jsd(const PolarFrame& frame, const LabelMap& labels,
                                           const Binning& binning = {});

/// Region boundaries come from `labels` (ground truth) for both frames.
[[nodiscard]] PerClass intra_tissue_jsd(const PolarFrame& frame_a, const PolarFrame& frame_b,
                                        const LabelMap& labels, const Binning& binning = {});

struct AttenuationOptions {
  int window = 16;
  double dynamic_range_db = 50.0;
  /// Histogram of slopes, dB per sample.
  Binning slope_binning{64, -1.5, 1.5};
};

/// Axial log-envelope slopes (dB per sample): one row per window position,
/// one column per scan line. Windows start every window/2 samples.
struct AttenuationMap {
  int window = 0;
  int stride = 0;
  std::vector<int> window_start;
  Array2D<double> slopes;
};

[[nodiscard]] AttenuationMap attenuation_map(const PolarFrame& frame,
                                             const AttenuationOptions& options = {});

/// Slopes of the windows lying entirely inside class `id`.
[[nodiscard]] std::vector<double> class_slopes(const AttenuationMap& map, const LabelMap& labels,
                                               ClassId id);

/// Per-class JSD between slope histograms of two frames.
[[nodiscard]] PerClass attenuation_jsd(const PolarFrame& frame_a, const PolarFrame& frame_b,
                                       const LabelMap& labels,
                                       const AttenuationOptions& options = {});

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  [[nodiscard]] std::int64_t total() const noexcept { return tp + fp + tn + fn; }
};

struct Overlap {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double dice = 0.0;
  double ppv = 0.0;
};

/// One class against the rest over pixels where `truth` is not background.
[[nodiscard]] ConfusionCounts confusion(const LabelMap& pred, const LabelMap& truth, ClassId id);

/// A class absent from both maps scores 1 everywhere; any other 0/0 raises
/// kUndefinedMetric.
[[nodiscard]] Overlap overlap_from_counts(const ConfusionCounts& counts);

[[nodiscard]] Overlap overlap_metrics(const LabelMap& pred, const LabelMap& truth, ClassId id);

}  // namespace usqz::metrics
