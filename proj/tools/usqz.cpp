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

// usqz: segmentation-based ultrasound frame codec.
//
//   usqz phantom    --out DIR --count N --seed S
//   usqz train      --manifest M --out model.bin
//   usqz compress   --in frame.pgm --model model.bin --out frame.usqz
//   usqz compress   --from-labels labels.pgm --out frame.usqz
//   usqz decompress --in frame.usqz --out frame.pgm --seed S
//   usqz simulate   --labels labels.pgm --out frame.pgm --seed S
//   usqz eval       --original a.pgm --decompressed b.pgm --labels l.pgm
//   usqz report     --manifest M --seed S

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "usqz/codec.hpp"
#include "usqz/error.hpp"
#include "usqz/io.hpp"
#include "usqz/phantom.hpp"
#include "usqz/pipeline.hpp"
#include "usqz/random.hpp"
#include "usqz/segmenter.hpp"
#include "usqz/synth.hpp"

namespace fs = std::filesystem;
using namespace usqz;

namespace {

// Exit statuses.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitTopology = 3;
constexpr int kExitEncoding = 4;
constexpr int kExitFormat = 5;
constexpr int kExitOther = 6;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return kExitIo;
    case ErrorCode::kTopologyFailure:
    case ErrorCode::kCrossingContours: return kExitTopology;
    case ErrorCode::kUnencodableDelta:
    case ErrorCode::kRangeViolation: return kExitEncoding;
    case ErrorCode::kBadMagic:
    case ErrorCode::kUnsupportedVersion:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kInvalidHeader:
    case ErrorCode::kMalformedContour:
    case ErrorCode::kChecksumMismatch:
    case ErrorCode::kTrailingData:
    case ErrorCode::kBadModel: return kExitFormat;
    default: return kExitOther;
  }
}

synth::SimulationConfig load_sim_config(const std::string& path) {
  return path.empty() ? synth::SimulationConfig{} : synth::load_config(path);
}

ProbeGeometry base_geometry(const synth::SimulationConfig& cfg) {
  ProbeGeometry g;
  g.radial_step_mm = cfg.radial_step_mm;
  return g;
}

void print_ratios(const codec::CompressedHeader& h, const std::string& mode) {
  if (mode != "actual")
    std::printf("compression ratio (paper):  %.1f\n",
                codec::compression_ratio(h, codec::RatioMode::kPaper));
  if (mode != "paper")
    std::printf("compression ratio (actual): %.1f\n",
                codec::compression_ratio(h, codec::RatioMode::kActual));
}

segment::ClassifierModel train_from_manifest(const std::vector<phantom::ManifestEntry>& entries,
                                             int window, const ProbeGeometry& base) {
  std::vector<speckle::FeatureStack> stacks;
  std::vector<LabelMap> labels;
  for (const auto& e : entries) {
    if (e.role != phantom::Role::kTrain) continue;
    stacks.push_back(speckle::feature_map(io::read_polar_pgm(e.original, base), window));
    labels.push_back(io::read_label_pgm(e.labels, base));
  }
  if (stacks.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest has no training items");
  return segment::train_classifier(stacks, labels);
}

// Original and decompressed frames next to each other, Cartesian.
void write_side_by_side(const fs::path& path, const PolarFrame& original,
                        const PolarFrame& decompressed) {
  const CartesianFrame a = polar_to_cartesian(original);
  const CartesianFrame b = polar_to_cartesian(decompressed);
  Array2D<std::uint8_t> both(a.height, a.width + b.width, 0);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) both(y, x) = a.pixels(y, x);
    for (int x = 0; x < b.width; ++x) both(y, a.width + x) = b.pixels(y, x);
  }
  io::write_bytes(path, io::encode_pgm({both, std::nullopt}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"usqz: segmentation-based ultrasound frame codec"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string in;

  // phantom
  auto* phantom_cmd = app.add_subcommand("phantom", "generate a synthetic IVUS-like dataset");
  int count = 10;
  std::uint32_t frequency_khz = 20000;
  phantom_cmd->add_option("--out", out, "output directory")->required();
  phantom_cmd->add_option("--count", count, "number of phantoms")->check(CLI::Range(2, 10000));
  phantom_cmd->add_option("--seed", seed, "random seed")->required();
  phantom_cmd->add_option("--config", config_path, "simulation config file");
  phantom_cmd->add_option("--frequency-khz", frequency_khz, "acquisition frequency");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the tissue classifier on a manifest");
  std::string manifest;
  int window = 9;
  train_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
  train_cmd->add_option("--out", out, "model file")->required();
  train_cmd->add_option("--window", window, "feature window (odd)");
  train_cmd->add_option("--config", config_path, "simulation config file");

  // compress
  auto* compress_cmd = app.add_subcommand("compress", "compress a polar frame to chain codes");
  std::string model_path;
  std::string labels_path;
  std::string ratio_mode = "both";
  auto* in_opt = compress_cmd->add_option("--in", in, "polar B-mode frame (PGM)");
  auto* labels_opt =
      compress_cmd->add_option("--from-labels", labels_path, "label map (PGM), skips the classifier");
  in_opt->excludes(labels_opt);
  compress_cmd->add_option("--model", model_path, "classifier model")->needs(in_opt);
  compress_cmd->add_option("--out", out, "compressed file")->required();
  compress_cmd->add_option("--frequency-khz", frequency_khz, "acquisition frequency");
  compress_cmd->add_option("--ratio-mode", ratio_mode, "paper, actual or both")
      ->check(CLI::IsMember({"paper", "actual", "both"}));
  compress_cmd->add_option("--config", config_path, "simulation config file");

  // decompress
  auto* decompress_cmd = app.add_subcommand("decompress", "regenerate a B-mode frame");
  std::string polar_out;
  decompress_cmd->add_option("--in", in, "compressed file")->required();
  decompress_cmd->add_option("--out", out, "Cartesian frame (PGM)")->required();
  decompress_cmd->add_option("--polar-out", polar_out, "also write the polar frame");
  decompress_cmd->add_option("--seed", seed, "speckle seed")->required();
  decompress_cmd->add_option("--config", config_path, "simulation config file");

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate a polar B-mode frame from labels");
  simulate_cmd->add_option("--labels", labels_path, "label map (PGM)")->required();
  simulate_cmd->add_option("--out", out, "polar frame (PGM)")->required();
  simulate_cmd->add_option("--seed", seed, "speckle seed")->required();
  simulate_cmd->add_option("--config", config_path, "simulation config file");
  simulate_cmd->add_option("--frequency-khz", frequency_khz, "centre frequency");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compare an original and a decompressed frame");
  std::string original_path, decompressed_path, pred_path, csv_path, frame_id = "frame";
  int bins = 64;
  int att_window = 16;
  eval_cmd->add_option("--original", original_path, "original polar frame")->required();
  eval_cmd->add_option("--decompressed", decompressed_path, "decompressed polar frame")->required();
  eval_cmd->add_option("--labels", labels_path, "ground-truth label map")->required();
  eval_cmd->add_option("--pred", pred_path, "predicted label map for SE/SP/Dice/PPV");
  eval_cmd->add_option("--bins", bins, "histogram bins")->check(CLI::Range(2, 256));
  eval_cmd->add_option("--attenuation-window", att_window, "axial window")->check(CLI::Range(8, 4096));
  eval_cmd->add_option("--csv", csv_path, "write CSV rows here");
  eval_cmd->add_option("--frame-id", frame_id, "frame id in CSV rows");

  // report
  auto* report_cmd = app.add_subcommand("report", "full compress/decompress/eval over a manifest");
  std::string out_dir;
  std::string split = "all";
  report_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
  report_cmd->add_option("--model", model_path, "classifier model (trained from manifest if absent)");
  report_cmd->add_option("--seed", seed, "decompression seed")->required();
  report_cmd->add_option("--config", config_path, "simulation config file");
  report_cmd->add_option("--bins", bins, "histogram bins")->check(CLI::Range(2, 256));
  report_cmd->add_option("--csv", csv_path, "write CSV rows here");
  report_cmd->add_option("--out-dir", out_dir, "write compressed, decompressed and side-by-side files");
  report_cmd->add_option("--split", split, "items to evaluate: all or test")
      ->check(CLI::IsMember({"all", "test"}));
  report_cmd->add_option("--frequency-khz", frequency_khz, "acquisition frequency");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const synth::SimulationConfig cfg = load_sim_config(config_path);
    const ProbeGeometry base = base_geometry(cfg);

    if (*phantom_cmd) {
      phantom::DatasetOptions options;
      options.geometry = base;
      options.simulation = cfg;
      options.frequency_khz = frequency_khz;
      const auto items = phantom::generate_dataset(count, options, seed);
      const auto path = phantom::write_dataset(out, items);
      std::printf("wrote %d phantoms, manifest %s\n", count, path.string().c_str());
    } else if (*train_cmd) {
      const auto model = train_from_manifest(phantom::read_manifest(manifest), window, base);
      segment::save_model(out, model);
      std::printf("trained on manifest %s, model %s\n", manifest.c_str(), out.c_str());
    } else if (*compress_cmd) {
      codec::CompressedFile file;
      if (!labels_path.empty()) {
        file = pipeline::compress_labels(io::read_label_pgm(labels_path, base), frequency_khz);
      } else {
        if (in.empty() || model_path.empty())
          throw Error(ErrorCode::kInvalidArgument, "compress needs --in with --model, or --from-labels");
        const auto model = segment::load_model(model_path);
        file = pipeline::compress_frame(io::read_polar_pgm(in, base), model, frequency_khz);
      }
      const auto bytes = codec::write_file(file);
      io::write_bytes(out, bytes);
      std::printf("wrote %zu bytes to %s\n", bytes.size(), out.c_str());
      print_ratios(file.header, ratio_mode);
    } else if (*decompress_cmd) {
      const auto bytes = io::read_bytes(in);
      const PolarFrame polar = synth::decompress_polar(bytes, cfg, seed);
      io::write_cartesian_pgm(out, polar_to_cartesian(polar));
      if (!polar_out.empty()) io::write_polar_pgm(polar_out, polar);
    } else if (*simulate_cmd) {
      LabelMap labels = io::read_label_pgm(labels_path, base);
      labels.geometry.radial_step_mm = cfg.radial_step_mm;
      synth::PsfSpec psf = cfg.psf;
      if (simulate_cmd->count("--frequency-khz")) psf.center_frequency_mhz = frequency_khz / 1000.0;
      io::write_polar_pgm(out, synth::simulate_bmode(labels, cfg.tissue, psf, cfg.dynamic_range_db, seed));
    } else if (*eval_cmd) {
      const PolarFrame original = io::read_polar_pgm(original_path, base);
      const PolarFrame decompressed = io::read_polar_pgm(decompressed_path, base);
      const LabelMap truth = io::read_label_pgm(labels_path, base);
      std::optional<LabelMap> pred;
      if (!pred_path.empty()) pred = io::read_label_pgm(pred_path, base);
      pipeline::EvalOptions options;
      options.binning.bins = bins;
      options.attenuation.window = att_window;
      options.attenuation.dynamic_range_db = cfg.dynamic_range_db;
      const auto e = pipeline::evaluate_frame(frame_id, original, decompressed, truth,
                                              pred ? &*pred : nullptr, options);
      const std::string csv = pipeline::csv_rows(e, true);
      if (!csv_path.empty()) io::write_text(csv_path, csv);
      else std::fputs(csv.c_str(), stdout);
      std::fputs(("\n" + pipeline::format_tables(pipeline::summarize({e}))).c_str(), stdout);
    } else if (*report_cmd) {
      const auto entries = phantom::read_manifest(manifest);
      const auto model = model_path.empty() ? train_from_manifest(entries, window, base)
                                            : segment::load_model(model_path);
      if (!out_dir.empty()) fs::create_directories(out_dir);
      pipeline::EvalOptions options;
      options.binning.bins = bins;
      options.attenuation.dynamic_range_db = cfg.dynamic_range_db;
      std::vector<pipeline::FrameEvaluation> evaluations;
      std::string csv = "frame,metric,target,value\n";
      for (const auto& e : entries) {
        if (split == "test" && e.role != phantom::Role::kTest) continue;
        const PolarFrame original = io::read_polar_pgm(e.original, base);
        const LabelMap truth = io::read_label_pgm(e.labels, base);
        const auto bytes =
            codec::write_file(pipeline::compress_frame(original, model, frequency_khz));
        const PolarFrame decompressed =
            synth::decompress_polar(bytes, cfg, derive_seed(seed, static_cast<std::uint64_t>(e.id)));
        const LabelMap pred = pipeline::resegment(decompressed, model);
        const std::string id = std::to_string(e.id);
        evaluations.push_back(pipeline::evaluate_frame(id, original, decompressed, truth, &pred, options));
        csv += pipeline::csv_rows(evaluations.back(), false);
        if (!out_dir.empty()) {
          const fs::path stem = fs::path(out_dir) / ("frame_" + id);
          io::write_bytes(stem.string() + ".usqz", bytes);
          io::write_polar_pgm(stem.string() + "_decompressed.pgm", decompressed);
          write_side_by_side(stem.string() + "_side_by_side.pgm", original, decompressed);
        }
      }
      if (!csv_path.empty()) io::write_text(csv_path, csv);
      std::fputs(pipeline::format_tables(pipeline::summarize(evaluations)).c_str(), stdout);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "usqz: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "usqz: %s\n", e.what());
    return kExitOther;
  }
  return kExitOk;
}
