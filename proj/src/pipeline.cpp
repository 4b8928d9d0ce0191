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

#include "usqz/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>

#include "usqz/error.hpp"

namespace usqz::pipeline {
namespace {

constexpr std::array<const char*, 3> kPairNames{"lumen-media", "media-external", "lumen-external"};

std::array<double, 3> pair_values(const metrics::TissuePairs& p) {
  return {p.lumen_media, p.media_external, p.lumen_external};
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string cell(const MeanStd& m) { return fmt(m.mean, "%.2f") + "(" + fmt(m.stddev, "%.2f") + ")"; }

std::string row(const std::string& name, std::span<const MeanStd> cells) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-16s", name.c_str());
  std::string out = buf;
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%-16s", cell(c).c_str());
    out += buf;
  }
  return out + "\n";
}

std::string header(const std::string& first, std::initializer_list<const char*> names) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-16s", first.c_str());
  std::string out = buf;
  for (const char* n : names) {
    std::snprintf(buf, sizeof buf, "%-16s", n);
    out += buf;
  }
  return out + "\n";
}

}  // namespace

codec::CompressedFile compress_frame(const PolarFrame& frame, const segment::ClassifierModel& model,
                                     std::uint32_t frequency_khz) {
  return codec::make_file(segment::frame_contours(frame, model), frame.geometry, frequency_khz);
}

codec::CompressedFile compress_labels(const LabelMap& labels, std::uint32_t frequency_khz) {
  return codec::make_file(segment::extract_contours(labels), labels.geometry, frequency_khz);
}

LabelMap resegment(const PolarFrame& frame, const segment::ClassifierModel& model) {
  return rasterize_contours(segment::frame_contours(frame, model), frame.geometry);
}

FrameEvaluation evaluate_frame(std::string frame_id, const PolarFrame& original,
                               const PolarFrame& decompressed, const LabelMap& truth,
                               const LabelMap* prediction, const EvalOptions& options) {
  FrameEvaluation e;
  e.frame_id = std::move(frame_id);
  e.inter_original = metrics::inter_tissue_jsd(original, truth, options.binning);
  e.inter_decompressed = metrics::inter_tissue_jsd(decompressed, truth, options.binning);
  e.intra = metrics::intra_tissue_jsd(original, decompressed, truth, options.binning);
  e.attenuation = metrics::attenuation_jsd(original, decompressed, truth, options.attenuation);
  if (prediction) {
    std::array<metrics::Overlap, 3> o{};
    for (const auto& c : kClassTable) o[c.id] = metrics::overlap_metrics(*prediction, truth, c.id);
    e.overlap = o;
  }
  return e;
}

std::string csv_rows(const FrameEvaluation& e, bool with_header) {
  std::string out = with_header ? "frame,metric,target,value\n" : "";
  auto add = [&](const char* metric, const std::string& target, double v) {
    out += e.frame_id + "," + metric + "," + target + "," + fmt(v, "%.9g") + "\n";
  };
  const auto io = pair_values(e.inter_original);
  const auto id = pair_values(e.inter_decompressed);
  for (int i = 0; i < 3; ++i) add("inter_jsd_original", kPairNames[i], io[i]);
  for (int i = 0; i < 3; ++i) add("inter_jsd_decompressed", kPairNames[i], id[i]);
  for (const auto& c : kClassTable) add("intra_jsd", std::string(c.name), e.intra[c.id]);
  for (const auto& c : kClassTable) add("attenuation_jsd", std::string(c.name), e.attenuation[c.id]);
  if (e.overlap) {
    for (const auto& c : kClassTable) {
      const auto& o = (*e.overlap)[c.id];
      add("se", std::string(c.name), o.sensitivity);
      add("sp", std::string(c.name), o.specificity);
      add("dice", std::string(c.name), o.dice);
      add("ppv", std::string(c.name), o.ppv);
    }
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double dev = 0.0;
  for (double v : values) dev += (v - mean) * (v - mean);
  return {mean, std::sqrt(dev / static_cast<double>(values.size()))};
}

Summary summarize(const std::vector<FrameEvaluation>& evaluations) {
  Summary s;
  s.frames = evaluations.size();
  for (int i = 0; i < 3; ++i) {
    std::vector<double> io, id, intra, att;
    for (const auto& e : evaluations) {
      io.push_back(pair_values(e.inter_original)[i]);
      id.push_back(pair_values(e.inter_decompressed)[i]);
      intra.push_back(e.intra[i]);
      att.push_back(e.attenuation[i]);
    }
    s.inter_original[i] = mean_std(io);
    s.inter_decompressed[i] = mean_std(id);
    s.intra[i] = mean_std(intra);
    s.attenuation[i] = mean_std(att);
  }
  const bool all_overlap =
      !evaluations.empty() &&
      std::all_of(evaluations.begin(), evaluations.end(), [](const auto& e) { return e.overlap.has_value(); });
  if (all_overlap) {
    std::array<std::vector<double>, 4> cols;
    for (const auto& e : evaluations) {
      std::array<double, 4> acc{};
      for (const auto& o : *e.overlap) {
        acc[0] += o.sensitivity;
        acc[1] += o.specificity;
        acc[2] += o.dice;
        acc[3] += o.ppv;
      }
      for (int k = 0; k < 4; ++k) cols[k].push_back(acc[k] / 3.0);
    }
    std::array<MeanStd, 4> o{};
    for (int k = 0; k < 4; ++k) o[k] = mean_std(cols[k]);
    s.overlap = o;
  }
  return s;
}

std::string format_tables(const Summary& s) {
  std::string out;
  out += "Inter-tissue JS divergence (nats), mean(std) over " + std::to_string(s.frames) + " frames\n";
  out += header("", {"Lumen-Media", "Media-Ext.", "Lumen-Ext."});
  out += row("Original", s.inter_original);
  out += row("Decompressed", s.inter_decompressed);
  out += "\nIntra-tissue JS divergence (nats)\n";
  out += header("", {"Lumen", "Media", "Ext."});
  out += row("Decompressed", s.intra);
  out += "\nIntra-tissue JS divergence of attenuation map (nats)\n";
  out += header("", {"Lumen", "Media", "Ext."});
  out += row("Decompressed", s.attenuation);
  if (s.overlap) {
    out += "\nSegmentation of decompressed frames (class mean)\n";
    out += header("", {"SE", "SP", "Dice", "PPV"});
    out += row("Decompressed", *s.overlap);
  }
  return out;
}

}  // namespace usqz::pipeline
