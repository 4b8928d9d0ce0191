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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <zlib.h>

#include "usqz/codec.hpp"
#include "usqz/grid.hpp"
#include "usqz/io.hpp"
#include "usqz/metrics.hpp"
#include "usqz/phantom.hpp"
#include "usqz/pipeline.hpp"
#include "usqz/random.hpp"
#include "usqz/segmenter.hpp"
#include "usqz/speckle_stats.hpp"
#include "usqz/synth.hpp"

using namespace usqz;

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kSuiteSize = 20;
constexpr int kTrainItems = 9;
std::uint64_t g_suite_seed = 20260101;  // overridable from the command line
constexpr std::uint64_t kDecompressSeed = 77;
constexpr std::array<const char*, 3> kClassNames{"lumen", "media", "external"};
constexpr std::array<const char*, 3> kPairNames{"lumen-media", "media-external", "lumen-external"};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::array<double, 3> pairs(const metrics::TissuePairs& p) {
  return {p.lumen_media, p.media_external, p.lumen_external};
}

// Shared phantom suite: generated once, compressed by a classifier trained on
// the first items, decompressed with an unrelated seed.
struct Suite {
  std::vector<phantom::DatasetItem> items;
  segment::ClassifierModel model;
  std::vector<std::vector<std::uint8_t>> compressed;
  std::vector<PolarFrame> decompressed;
  std::vector<LabelMap> resegmented;
  std::vector<pipeline::FrameEvaluation> evaluations;
  double seconds = 0.0;
};

const Suite& suite() {
  static const Suite s = [] {
    const auto t0 = Clock::now();
    Suite out;
    const phantom::DatasetOptions options;
    out.items = phantom::generate_dataset(kSuiteSize, options, g_suite_seed);
    std::vector<speckle::FeatureStack> stacks;
    std::vector<LabelMap> labels;
    for (int i = 0; i < kTrainItems; ++i) {
      stacks.push_back(speckle::feature_map(out.items[i].original, 9));
      labels.push_back(out.items[i].phantom.labels);
    }
    out.model = segment::train_classifier(stacks, labels);
    for (const auto& item : out.items) {
      out.compressed.push_back(codec::write_file(
          pipeline::compress_frame(item.original, out.model, item.frequency_khz)));
      out.decompressed.push_back(synth::decompress_polar(
          out.compressed.back(), options.simulation,
          derive_seed(kDecompressSeed, static_cast<std::uint64_t>(item.id))));
      out.resegmented.push_back(pipeline::resegment(out.decompressed.back(), out.model));
      out.evaluations.push_back(pipeline::evaluate_frame(
          std::to_string(item.id), item.original, out.decompressed.back(), item.phantom.labels,
          &out.resegmented.back()));
    }
    out.seconds = seconds_since(t0);
    return out;
  }();
  return s;
}

// 1. Compression ratio arithmetic.
Outcome criterion_ratio() {
  const auto t0 = Clock::now();
  ProbeGeometry g;  // 384 x 256
  Contour lumen{kLumen, std::vector<int>(256, 100)};
  Contour media{kMedia, std::vector<int>(256, 140)};
  const auto file = codec::make_file(ContourSet{{lumen, media}}, g, 20000);
  const double paper = codec::compression_ratio(file.header, codec::RatioMode::kPaper);
  const double actual = codec::compression_ratio(file.header, codec::RatioMode::kActual);
  const double expected = 786432.0 / 1084.0;
  const bool four_sig = fmt("%.4g", paper) == "725.5" && std::abs(paper - expected) < 1e-9;
  const bool size_ok = codec::write_file(file).size() == codec::encoded_size(file.header);
  const double secs = seconds_since(t0);
  return {four_sig && size_ok && secs < 1.0,
          "paper " + fmt("%.4f", paper) + " actual " + fmt("%.1f", actual) + " in " +
              fmt("%.3f", secs) + " s"};
}

// Random closed walk: n deltas from the move alphabet summing to zero.
std::vector<int> random_closed_walk(Rng& rng, int n) {
  std::vector<int> d(n);
  int sum = 0;
  for (int& x : d) sum += (x = rng.uniform_int(kMinMoveDelta, kMaxMoveDelta));
  while (sum != 0) {
    int& x = d[rng.uniform_int(0, n - 1)];
    if (sum > 0 && x > kMinMoveDelta) --x, --sum;
    else if (sum < 0 && x < kMaxMoveDelta) ++x, ++sum;
  }
  std::vector<int> r(n, 0);
  for (int t = 1; t < n; ++t) r[t] = r[t - 1] + d[t - 1];
  return r;
}

// Random nested contour set with every circular delta in the move alphabet.
// The pointwise maximum of two encodable walks is encodable, which keeps the
// media boundary outside the lumen boundary.
ContourSet random_encodable(Rng& rng, const ProbeGeometry& g) {
  const int n = g.num_scan_lines;
  const int nr = g.samples_per_line;
  ContourSet set;
  std::vector<int> lumen = random_closed_walk(rng, n);
  std::vector<int> media = random_closed_walk(rng, n);
  const auto [lo_l, hi_l] = std::minmax_element(lumen.begin(), lumen.end());
  const int span_l = *hi_l - *lo_l;
  if (span_l >= nr) return set;
  const int shift_l = rng.uniform_int(0, nr - 1 - span_l) - *lo_l;
  for (int& v : lumen) v += shift_l;
  const auto [lo_m, hi_m] = std::minmax_element(media.begin(), media.end());
  const int span_m = *hi_m - *lo_m;
  if (span_m < nr) {
    const int shift_m = rng.uniform_int(0, nr - 1 - span_m) - *lo_m;
    for (int t = 0; t < n; ++t) media[t] = std::max(media[t] + shift_m, lumen[t]);
  } else {
    media = lumen;
  }
  const int count = rng.uniform_int(0, 2);
  if (count >= 1) set.boundaries.push_back({kLumen, lumen});
  if (count >= 2) set.boundaries.push_back({kMedia, media});
  return set;
}

// 2. Codec losslessness.
Outcome criterion_lossless() {
  const auto t0 = Clock::now();
  Rng rng(42);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    ProbeGeometry g;
    g.num_scan_lines = 8 << rng.uniform_int(0, 5);
    g.samples_per_line = rng.uniform_int(64, 512);
    const ContourSet set = random_encodable(rng, g);
    const auto file = codec::make_file(set, g, static_cast<std::uint32_t>(rng.uniform_int(1, 60000)));
    const auto bytes = codec::write_file(file);
    const auto back = codec::read_file(bytes);
    if (!(back == file) || !(codec::decode_contours(back) == set) || codec::write_file(back) != bytes)
      ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          std::to_string(failures) + " mismatches of 10000 in " + fmt("%.2f", secs) + " s"};
}

// 3. Intra-tissue JSD, original vs decompressed, and the two-seed floor.
Outcome criterion_speckle_realism() {
  const auto t0 = Clock::now();
  const Suite& s = suite();
  std::array<std::vector<double>, 3> intra, floor;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    for (int c = 0; c < 3; ++c) intra[c].push_back(s.evaluations[i].intra[c]);
    const auto& item = s.items[i];
    const synth::SimulationConfig cfg;
    const auto a = synth::simulate_bmode(item.phantom.labels, item.tissue, cfg.psf,
                                         cfg.dynamic_range_db, 1000 + i);
    const auto b = synth::simulate_bmode(item.phantom.labels, item.tissue, cfg.psf,
                                         cfg.dynamic_range_db, 2000 + i);
    const auto f = metrics::intra_tissue_jsd(a, b, item.phantom.labels);
    for (int c = 0; c < 3; ++c) floor[c].push_back(f[c]);
  }
  bool ok = true;
  std::string detail;
  for (int c = 0; c < 3; ++c) {
    const double m = mean(intra[c]);
    const double fl = mean(floor[c]);
    ok = ok && m <= 0.15 && fl <= 0.05;
    detail += std::string(kClassNames[c]) + " " + fmt("%.3f", m) + " (floor " + fmt("%.3f", fl) + ") ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120.0;
  return {ok, detail + "in " + fmt("%.1f", secs) + " s"};
}

// 4. Contrast preservation.
Outcome criterion_contrast() {
  const Suite& s = suite();
  bool ok = true;
  std::string detail;
  for (int p = 0; p < 3; ++p) {
    std::vector<double> diffs, orig, dec;
    for (const auto& e : s.evaluations) {
      const double o = pairs(e.inter_original)[p];
      const double d = pairs(e.inter_decompressed)[p];
      diffs.push_back(std::abs(d - o));
      orig.push_back(o);
      dec.push_back(d);
    }
    const double m = mean(diffs);
    ok = ok && m <= 0.10;
    detail += std::string(kPairNames[p]) + " " + fmt("%.3f", m) + " (" + fmt("%.2f", mean(orig)) +
              " vs " + fmt("%.2f", mean(dec)) + ") ";
  }
  return {ok, detail};
}

// 5. Attenuation consistency.
Outcome criterion_attenuation() {
  const Suite& s = suite();
  bool ok = true;
  std::string detail;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> v;
    for (const auto& e : s.evaluations) v.push_back(e.attenuation[c]);
    const double m = mean(v);
    ok = ok && m <= 0.10;
    detail += std::string(kClassNames[c]) + " " + fmt("%.3f", m) + " ";
  }
  return {ok, detail};
}

// 6. Re-segmentation of held-out decompressed frames.
Outcome criterion_resegmentation() {
  const Suite& s = suite();
  std::vector<double> dice, se;
  std::array<std::vector<double>, 3> dice_c, se_c;
  for (std::size_t i = kTrainItems; i < s.items.size(); ++i) {
    const auto& ov = *s.evaluations[i].overlap;
    double d = 0.0, e = 0.0;
    for (int c = 0; c < 3; ++c) {
      d += ov[c].dice / 3.0;
      e += ov[c].sensitivity / 3.0;
      dice_c[c].push_back(ov[c].dice);
      se_c[c].push_back(ov[c].sensitivity);
    }
    dice.push_back(d);
    se.push_back(e);
  }
  const double md = mean(dice);
  const double ms = mean(se);
  std::string detail = "Dice " + fmt("%.3f", md) + " SE " + fmt("%.3f", ms) + " [";
  for (int c = 0; c < 3; ++c)
    detail += std::string(kClassNames[c]) + " " + fmt("%.3f", mean(dice_c[c])) + "/" +
              fmt("%.3f", mean(se_c[c])) + (c < 2 ? ", " : "]");
  return {md >= 0.85 && ms >= 0.95, detail};
}

// 7. Fully developed speckle from a uniform medium.
Outcome criterion_nakagami() {
  ProbeGeometry g;
  LabelMap labels(g, kMedia);
  synth::TissueEchoParams params = synth::TissueEchoParams::defaults();
  for (auto& c : params.classes) c.attenuation_db_mhz_cm = 0.0;
  const synth::PsfSpec psf;
  const auto env = synth::simulate_envelope(labels, params, psf, 9);
  // Skip the zero-padded ends of each scan line where the PSF is truncated.
  const int margin = 16;
  std::vector<double> samples;
  for (int r = margin; r < env.rows() - margin; ++r)
    for (int t = 0; t < env.cols(); ++t) samples.push_back(env(r, t));
  const auto fit = speckle::nakagami_fit(samples);
  return {samples.size() >= 10000 && fit.m >= 0.85 && fit.m <= 1.15,
          "m " + fmt("%.4f", fit.m) + " over " + std::to_string(samples.size()) + " samples"};
}

double brute_jsd(const std::vector<double>& p, const std::vector<double>& q) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double m = (static_cast<long double>(p[i]) + q[i]) / 2.0L;
    if (p[i] > 0) total += 0.5L * p[i] * std::log(static_cast<long double>(p[i]) / m);
    if (q[i] > 0) total += 0.5L * q[i] * std::log(static_cast<long double>(q[i]) / m);
  }
  return static_cast<double>(total);
}

// 8. Metric oracles.
Outcome criterion_metric_oracles() {
  Rng rng(8);
  double worst = 0.0;
  bool bounds = true, symmetric = true;
  for (int i = 0; i < 1000; ++i) {
    const int n = rng.uniform_int(2, 6);
    std::vector<double> p(n), q(n);
    double sp = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k) {
      p[k] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      q[k] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      sp += p[k];
      sq += q[k];
    }
    if (sp == 0.0) p[0] = sp = 1.0;
    if (sq == 0.0) q[n - 1] = sq = 1.0;
    for (int k = 0; k < n; ++k) {
      p[k] /= sp;
      q[k] /= sq;
    }
    const auto pp = metrics::pmf_from_probabilities(p);
    const auto qq = metrics::pmf_from_probabilities(q);
    const double a = metrics::js_divergence(pp, qq);
    const double b = metrics::js_divergence(qq, pp);
    worst = std::max(worst, std::abs(a - brute_jsd(p, q)));
    bounds = bounds && a >= 0.0 && a <= std::numbers::ln2;
    symmetric = symmetric && a == b;
  }
  // Dice = 2 PPV SE / (PPV + SE) on integer counts, compared as exact fractions:
  // 2TP/(2TP+FP+FN) against 2TP^2/(TP(2TP+FP+FN)).
  bool identity = true;
  for (std::int64_t tp = 1; tp <= 40; ++tp)
    for (std::int64_t fp = 0; fp <= 40; ++fp)
      for (std::int64_t fn = 0; fn <= 40; ++fn) {
        const metrics::Overlap o = metrics::overlap_from_counts({tp, fp, 100, fn});
        const double harmonic = 2.0 * o.ppv * o.sensitivity / (o.ppv + o.sensitivity);
        const std::int64_t lhs_num = 2 * tp, lhs_den = 2 * tp + fp + fn;
        // PPV = tp/(tp+fp), SE = tp/(tp+fn); harmonic mean as a fraction.
        const std::int64_t rhs_num = 2 * tp * tp;
        const std::int64_t rhs_den = tp * (tp + fn) + tp * (tp + fp);
        identity = identity && lhs_num * rhs_den == rhs_num * lhs_den &&
                   std::abs(o.dice - harmonic) <= 4 * std::numeric_limits<double>::epsilon();
      }
  return {worst <= 1e-12 && bounds && symmetric && identity,
          "max oracle error " + fmt("%.2e", worst) + (bounds ? "" : ", bounds violated") +
              (symmetric ? "" : ", asymmetric") + (identity ? "" : ", Dice identity broken")};
}

std::uint32_t crc(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

// Every artifact of one pipeline run, concatenated.
std::vector<std::uint8_t> pipeline_artifacts(std::uint64_t seed) {
  const auto items = phantom::generate_dataset(4, {}, seed);
  std::vector<speckle::FeatureStack> stacks;
  std::vector<LabelMap> labels;
  for (int i = 0; i < 3; ++i) {
    stacks.push_back(speckle::feature_map(items[i].original, 9));
    labels.push_back(items[i].phantom.labels);
  }
  const auto model = segment::train_classifier(stacks, labels);
  std::vector<std::uint8_t> out = segment::serialize_model(model);
  auto append = [&out](std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); };
  for (const auto& item : items) {
    append(io::encode_pgm({item.original.samples, item.original.geometry}));
    const auto bytes = codec::write_file(pipeline::compress_frame(item.original, model, 20000));
    append(bytes);
    const auto dec = synth::decompress_polar(bytes, synth::SimulationConfig{}, seed + 1);
    append(io::encode_pgm({dec.samples, dec.geometry}));
    const auto e = pipeline::evaluate_frame(std::to_string(item.id), item.original, dec,
                                            item.phantom.labels);
    const std::string csv = pipeline::csv_rows(e, false);
    append({reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()});
  }
  return out;
}

// Digest of pipeline_artifacts(5) recorded on the reference platform.
constexpr std::uint32_t kGoldenArtifactCrc = 0x6ae09dc9;

// 9. Determinism.
Outcome criterion_determinism() {
  const auto a = pipeline_artifacts(5);
  const auto b = pipeline_artifacts(5);
  const std::uint32_t digest = crc(a);
  const bool golden = digest == kGoldenArtifactCrc;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu bytes, crc32 %08x, golden %s", a.size(), digest,
                golden ? "match" : "MISMATCH");
  return {a == b && golden, buf};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_suite_seed = std::stoull(argv[1]);
  const std::array<std::pair<const char*, std::function<Outcome()>>, 9> criteria{{
      {"compression ratio", criterion_ratio},
      {"codec losslessness", criterion_lossless},
      {"speckle realism", criterion_speckle_realism},
      {"contrast preservation", criterion_contrast},
      {"attenuation consistency", criterion_attenuation},
      {"re-segmentation", criterion_resegmentation},
      {"speckle statistics", criterion_nakagami},
      {"metric oracles", criterion_metric_oracles},
      {"determinism", criterion_determinism},
  }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu %-24s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
