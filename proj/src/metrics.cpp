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

#include "usqz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "usqz/error.hpp"

namespace usqz::metrics {
namespace {

void require_same_geometry(const ProbeGeometry& a, const ProbeGeometry& b, const char* what) {
  if (a.num_scan_lines != b.num_scan_lines || a.samples_per_line != b.samples_per_line)
    throw Error(ErrorCode::kGeometryMismatch, what);
}

std::vector<double> checked_region(const PolarFrame& frame, const LabelMap& labels, ClassId id) {
  auto values = region_values(frame, labels, id);
  if (values.size() < kMinRegionPixels)
    throw Error(ErrorCode::kInsufficientPixels,
                std::string(class_name(id)) + " region has " + std::to_string(values.size()) +
                    " pixels, need " + std::to_string(kMinRegionPixels));
  return values;
}

double kl_term(double p, double m) { return p > 0.0 ? p * std::log(p / m) : 0.0; }

}  // namespace

int Binning::bin_of(double v) const noexcept {
  const double pos = (v - lo) / (hi - lo) * bins;
  if (!(pos >= 0.0)) return 0;  // also catches NaN
  return std::min(static_cast<int>(pos), bins - 1);
}

Pmf make_pmf(std::span<const double> values, const Binning& binning, bool add_one_smoothing) {
  if (binning.bins < 1 || !(binning.hi > binning.lo))
    throw Error(ErrorCode::kInvalidArgument, "invalid binning");
  if (values.empty()) throw Error(ErrorCode::kInsufficientPixels, "histogram of no samples");
  std::vector<double> counts(binning.bins, add_one_smoothing ? 1.0 : 0.0);
  for (double v : values) counts[binning.bin_of(v)] += 1.0;
  const double total = static_cast<double>(values.size()) + (add_one_smoothing ? binning.bins : 0);
  for (double& c : counts) c /= total;
  return {binning, std::move(counts), values.size()};
}

Pmf pmf_from_probabilities(std::vector<double> probabilities, std::size_t sample_count) {
  if (probabilities.empty()) throw Error(ErrorCode::kInvalidArgument, "empty pmf");
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "pmf does not sum to 1");
  if (sample_count < 1) throw Error(ErrorCode::kInvalidArgument, "sample_count must be >= 1");
  Binning b;
  b.bins = static_cast<int>(probabilities.size());
  return {b, std::move(probabilities), sample_count};
}

double js_divergence(const Pmf& p, const Pmf& q) {
  if (!(p.binning == q.binning) || p.probabilities.size() != q.probabilities.size())
    throw Error(ErrorCode::kBinningMismatch, "operands use different binnings");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
    const double a = p.probabilities[i];
    const double b = q.probabilities[i];
    const double m = 0.5 * (a + b);
    kl_p += kl_term(a, m);
    kl_q += kl_term(b, m);
  }
  const double jsd = 0.5 * kl_p + 0.5 * kl_q;
  return std::clamp(jsd, 0.0, std::log(2.0));
}

std::vector<double> region_values(const PolarFrame& frame, const LabelMap& labels, ClassId id) {
  require_same_geometry(frame.geometry, labels.geometry, "frame and labels differ in size");
  std::vector<double> out;
  const auto px = frame.samples.values();
  const auto lb = labels.labels.values();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (lb[i] == id) out.push_back(px[i]);
  return out;
}

TissuePairs inter_tissue_jsd(const PolarFrame& frame, const LabelMap& labels,
                             const Binning& binning) {
  const Pmf lumen = make_pmf(checked_region(frame, labels, kLumen), binning);
  const Pmf media = make_pmf(checked_region(frame, labels, kMedia), binning);
  const Pmf external = make_pmf(checked_region(frame, labels, kExternal), binning);
  return {js_divergence(lumen, media), js_divergence(media, external),
          js_divergence(lumen, external)};
}

PerClass intra_tissue_jsd(const PolarFrame& frame_a, const PolarFrame& frame_b,
                          const LabelMap& labels, const Binning& binning) {
  require_same_geometry(frame_a.geometry, frame_b.geometry, "frames differ in size");
  PerClass out{};
  for (const auto& c : kClassTable) {
    out[c.id] = js_divergence(make_pmf(checked_region(frame_a, labels, c.id), binning),
                              make_pmf(checked_region(frame_b, labels, c.id), binning));
  }
  return out;
}

AttenuationMap attenuation_map(const PolarFrame& frame, const AttenuationOptions& options) {
  if (options.window < 8) throw Error(ErrorCode::kInvalidArgument, "attenuation window must be >= 8");
  const int nr = frame.geometry.samples_per_line;
  const int nt = frame.geometry.num_scan_lines;
  AttenuationMap map;
  map.window = options.window;
  map.stride = std::max(1, options.window / 2);
  for (int start = 0; start + options.window <= nr; start += map.stride)
    map.window_start.push_back(start);
  map.slopes = Array2D<double>(static_cast<int>(map.window_start.size()), nt, 0.0);

  // Least-squares slope against centred sample positions.
  const int w = options.window;
  const double centre = (w - 1) / 2.0;
  double sxx = 0.0;
  for (int i = 0; i < w; ++i) sxx += (i - centre) * (i - centre);
  const double db_per_level = options.dynamic_range_db / 255.0;

  for (std::size_t k = 0; k < map.window_start.size(); ++k) {
    const int start = map.window_start[k];
    for (int t = 0; t < nt; ++t) {
      double sxy = 0.0;
      for (int i = 0; i < w; ++i) sxy += (i - centre) * frame.samples(start + i, t);
      map.slopes(static_cast<int>(k), t) = db_per_level * sxy / sxx;
    }
  }
  return map;
}

std::vector<double> class_slopes(const AttenuationMap& map, const LabelMap& labels, ClassId id) {
  std::vector<double> out;
  const int nt = labels.geometry.num_scan_lines;
  if (map.slopes.cols() != nt)
    throw Error(ErrorCode::kGeometryMismatch, "attenuation map and labels differ in size");
  for (std::size_t k = 0; k < map.window_start.size(); ++k) {
    const int start = map.window_start[k];
    for (int t = 0; t < nt; ++t) {
      bool inside = true;
      for (int i = 0; i < map.window && inside; ++i) inside = labels.labels(start + i, t) == id;
      if (inside) out.push_back(map.slopes(static_cast<int>(k), t));
    }
  }
  return out;
}

PerClass attenuation_jsd(const PolarFrame& frame_a, const PolarFrame& frame_b,
                         const LabelMap& labels, const AttenuationOptions& options) {
  require_same_geometry(frame_a.geometry, frame_b.geometry, "frames differ in size");
  require_same_geometry(frame_a.geometry, labels.geometry, "frames and labels differ in size");
  const AttenuationMap map_a = attenuation_map(frame_a, options);
  const AttenuationMap map_b = attenuation_map(frame_b, options);
  PerClass out{};
  for (const auto& c : kClassTable) {
    const auto sa = class_slopes(map_a, labels, c.id);
    const auto sb = class_slopes(map_b, labels, c.id);
    if (sa.size() < kMinRegionPixels)
      throw Error(ErrorCode::kInsufficientPixels,
                  std::string(c.name) + " has only " + std::to_string(sa.size()) +
                      " attenuation windows, need " + std::to_string(kMinRegionPixels));
    out[c.id] = js_divergence(make_pmf(sa, options.slope_binning),
                              make_pmf(sb, options.slope_binning));
  }
  return out;
}

ConfusionCounts confusion(const LabelMap& pred, const LabelMap& truth, ClassId id) {
  require_same_geometry(pred.geometry, truth.geometry, "prediction and truth differ in size");
  ConfusionCounts c;
  const auto p = pred.labels.values();
  const auto g = truth.labels.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kBackground) continue;
    const bool pp = p[i] == id;
    const bool gg = g[i] == id;
    if (pp && gg) ++c.tp;
    else if (pp) ++c.fp;
    else if (gg) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Overlap overlap_from_counts(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0)
    throw Error(ErrorCode::kInvalidArgument, "negative confusion count");
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return {1.0, 1.0, 1.0, 1.0};
  auto ratio = [](std::int64_t num, std::int64_t den, const char* name) {
    if (den == 0) throw Error(ErrorCode::kUndefinedMetric, std::string(name) + " is 0/0");
    return static_cast<double>(num) / static_cast<double>(den);
  };
  Overlap o;
  o.sensitivity = ratio(c.tp, c.tp + c.fn, "sensitivity");
  o.specificity = ratio(c.tn, c.tn + c.fp, "specificity");
  o.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "dice");
  o.ppv = ratio(c.tp, c.tp + c.fp, "ppv");
  return o;
}

Overlap overlap_metrics(const LabelMap& pred, const LabelMap& truth, ClassId id) {
  return overlap_from_counts(confusion(pred, truth, id));
}

}  // namespace usqz::metrics
