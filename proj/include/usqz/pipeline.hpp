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
#include <optional>
#include <string>
#include <vector>

#include "usqz/codec.hpp"
#include "usqz/metrics.hpp"
#include "usqz/segmenter.hpp"

namespace usqz::pipeline {

/// Compressor front end: speckle features, classification, contour
/// extraction, container.
[[nodiscard]] codec::CompressedFile compress_frame(const PolarFrame& frame,
                                                   const segment::ClassifierModel& model,
                                                   std::uint32_t frequency_khz);

/// Same container built from a known label map (bypasses the classifier).
[[nodiscard]] codec::CompressedFile compress_labels(const LabelMap& labels,
                                                    std::uint32_t frequency_khz);

/// Segments `frame` and regularizes the result into nested rings.
[[nodiscard]] LabelMap resegment(const PolarFrame& frame, const segment::ClassifierModel& model);

struct EvalOptions {
  metrics::Binning binning;
  metrics::AttenuationOptions attenuation;
};

struct FrameEvaluation {
  std::string frame_id;
  metrics::TissuePairs inter_original;
  metrics::TissuePairs inter_decompressed;
  metrics::PerClass intra{};
  metrics::PerClass attenuation{};
  std::optional<std::array<metrics::Overlap, 3>> overlap;
};

/// Regions come from `truth`. Overlap rows are filled when `prediction` is
/// given.
[[nodiscard]] FrameEvaluation evaluate_frame(std::string frame_id, const PolarFrame& original,
                                             const PolarFrame& decompressed,
                                             const LabelMap& truth,
                                             const LabelMap* prediction = nullptr,
                                             const EvalOptions& options = {});

/// One `frame,metric,target,value` row per number.
[[nodiscard]] std::string csv_rows(const FrameEvaluation& e, bool header);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

[[nodiscard]] MeanStd mean_std(const std::vector<double>& values);

/// Aggregated tables: inter-tissue JSD, intra-tissue JSD, attenuation JSD
/// and SE/SP/Dice/PPV, each as mean(std) over frames.
struct Summary {
  std::array<MeanStd, 3> inter_original{};      // lumen-media, media-ext, lumen-ext
  std::array<MeanStd, 3> inter_decompressed{};
  std::array<MeanStd, 3> intra{};               // lumen, media, external
  std::array<MeanStd, 3> attenuation{};
  std::optional<std::array<MeanStd, 4>> overlap;  // SE, SP, Dice, PPV (class mean)
  std::size_t frames = 0;
};

[[nodiscard]] Summary summarize(const std::vector<FrameEvaluation>& evaluations);
[[nodiscard]] std::string format_tables(const Summary& summary);

}  // namespace usqz::pipeline
