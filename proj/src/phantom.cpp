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

#include "usqz/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "usqz/codec.hpp"
#include "usqz/error.hpp"
#include "usqz/io.hpp"
#include "usqz/random.hpp"

namespace usqz::phantom {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<int> rounded_profile(const RadiusProfile& profile, int n, const char* name) {
  std::vector<int> radii(n);
  for (int t = 0; t < n; ++t)
    radii[t] = static_cast<int>(std::lround(profile.at(kTwoPi * t / n)));
  for (int t = 0; t < n; ++t) {
    const int delta = radii[(t + 1) % n] - radii[t];
    if (std::abs(delta) > 2)
      throw Error(ErrorCode::kInfeasibleSpec, std::string(name) + " steps by " +
                                                  std::to_string(delta) + " at scan line " +
                                                  std::to_string(t));
  }
  return radii;
}

std::string item_stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%03d", id);
  return buf;
}

RadiusProfile random_profile(Rng& rng, double base, double amplitude_cap,
                             const DatasetOptions& o, int n) {
  RadiusProfile p;
  p.base = base;
  const int count = rng.uniform_int(0, o.max_harmonics);
  // Split the slope and amplitude budgets across the harmonics.
  double slope_left = o.slope_budget;
  double amplitude_left = amplitude_cap;
  for (int i = 0; i < count; ++i) {
    Harmonic h;
    h.frequency = rng.uniform_int(1, o.max_frequency);
    h.phase = rng.uniform(0.0, kTwoPi);
    const double slope_share = slope_left * rng.uniform(0.3, 1.0);
    const double by_slope = slope_share / (h.frequency * kTwoPi / n);
    h.amplitude = std::min(by_slope, amplitude_left * rng.uniform(0.3, 1.0));
    slope_left -= h.amplitude * h.frequency * kTwoPi / n;
    amplitude_left -= h.amplitude;
    p.harmonics.push_back(h);
  }
  return p;
}

}  // namespace

double RadiusProfile::at(double theta) const noexcept {
  double r = base;
  for (const auto& h : harmonics) r += h.amplitude * std::sin(h.frequency * theta + h.phase);
  return r;
}

std::string_view role_name(Role role) noexcept { return role == Role::kTrain ? "train" : "test"; }

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  const ProbeGeometry& g = spec.geometry;
  g.validate();
  if (spec.dead_zone < 0 || !(spec.label_noise >= 0.0 && spec.label_noise <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "dead zone and label noise out of range");
  const int n = g.num_scan_lines;
  const int nr = g.samples_per_line;

  std::vector<int> lumen = rounded_profile(spec.lumen, n, "lumen");
  std::vector<int> media = rounded_profile(spec.media, n, "media");
  for (int t = 0; t < n; ++t) {
    if (lumen[t] <= spec.dead_zone)
      throw Error(ErrorCode::kInfeasibleSpec, "lumen reaches the catheter dead zone");
    if (media[t] < lumen[t]) throw Error(ErrorCode::kInfeasibleSpec, "media crosses lumen");
    if (media[t] > nr - 1) throw Error(ErrorCode::kInfeasibleSpec, "media leaves the frame");
  }
  // Steps of -2 are outside the move alphabet; spread them out.
  lumen = make_encodable(lumen, {}, nr - 1);
  media = make_encodable(media, lumen, nr - 1);

  Phantom out;
  out.contours.boundaries = {{kLumen, lumen}, {kMedia, media}};
  if (!satisfies_contour_invariants(out.contours, g))
    throw Error(ErrorCode::kInfeasibleSpec, "feasibility pass failed");
  out.labels = rasterize_contours(out.contours, g);
  for (int r = 0; r < std::min(spec.dead_zone, nr); ++r)
    for (int t = 0; t < n; ++t) out.labels.labels(r, t) = kBackground;

  if (spec.label_noise > 0.0) {
    Rng rng(seed);
    for (auto& v : out.labels.labels.values()) {
      const double u = rng.uniform();
      const int cls = rng.uniform_int(0, static_cast<int>(kClassTable.size()) - 1);
      if (v != kBackground && u < spec.label_noise) v = kClassTable[cls].id;
    }
  }
  return out;
}

PhantomSpec random_spec(const DatasetOptions& o, std::uint64_t seed) {
  Rng rng(seed);
  PhantomSpec spec;
  spec.geometry = o.geometry;
  spec.dead_zone = o.dead_zone;
  const int n = o.geometry.num_scan_lines;
  const double lumen_base = rng.uniform(o.lumen_base_min, o.lumen_base_max);
  const double thickness = rng.uniform(o.media_thickness_min, o.media_thickness_max);
  // Each boundary may move at most (thickness_min - 2) / 2, so the two can
  // never meet.
  const double cap = std::max(0.0, (o.media_thickness_min - 2.0) / 2.0);
  spec.lumen = random_profile(rng, lumen_base, cap, o, n);
  spec.media = random_profile(rng, lumen_base + thickness, cap, o, n);
  return spec;
}

std::vector<DatasetItem> generate_dataset(int n, const DatasetOptions& o, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "dataset needs at least 2 items");
  const int n_test = std::max(1, n / 10);
  std::vector<DatasetItem> items;
  items.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t item_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    DatasetItem item;
    item.id = i;
    item.role = i < n - n_test ? Role::kTrain : Role::kTest;
    item.spec = random_spec(o, derive_seed(item_seed, 0));
    item.phantom = generate_phantom(item.spec, derive_seed(item_seed, 1));

    Rng rng(derive_seed(item_seed, 2));
    item.frequency_khz = o.frequency_khz;
    item.tissue = o.simulation.tissue;
    for (auto& c : item.tissue.classes)
      c.echogenicity *= 1.0 + o.echo_jitter * (2.0 * rng.uniform() - 1.0);

    synth::PsfSpec psf = o.simulation.psf;
    psf.center_frequency_mhz = o.frequency_khz / 1000.0;
    LabelMap sim_labels = item.phantom.labels;
    sim_labels.geometry.radial_step_mm = o.simulation.radial_step_mm;
    item.original = synth::simulate_bmode(sim_labels, item.tissue, psf,
                                          o.simulation.dynamic_range_db, derive_seed(item_seed, 3));
    item.original.geometry = o.geometry;
    if (o.intensity_noise > 0.0) {
      for (auto& v : item.original.samples.values()) {
        const double noisy = v + o.intensity_noise * rng.normal();
        v = static_cast<std::uint8_t>(std::lround(std::clamp(noisy, 0.0, 255.0)));
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const std::vector<DatasetItem>& items) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory '" + dir.string() + "'");

  std::string manifest = "# id role original labels contours\n";
  for (const auto& item : items) {
    const std::string stem = item_stem(item.id);
    const std::string original = stem + "_original.pgm";
    const std::string labels = stem + "_labels.pgm";
    const std::string contours = stem + "_contours.usqz";
    io::write_polar_pgm(dir / original, item.original);
    io::write_label_pgm(dir / labels, item.phantom.labels);
    io::write_bytes(dir / contours,
                    codec::write_file(codec::make_file(item.phantom.contours, item.spec.geometry,
                                                       item.frequency_khz)));
    manifest += std::to_string(item.id) + " " + std::string(role_name(item.role)) + " " +
                original + " " + labels + " " + contours + "\n";
  }
  const auto path = dir / "manifest.txt";
  io::write_text(path, manifest);
  return path;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest '" + path.string() + "'");
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    ManifestEntry e;
    std::string role, original, labels, contours;
    if (!(fields >> e.id >> role >> original >> labels >> contours) ||
        (role != "train" && role != "test"))
      throw Error(ErrorCode::kIo, path.string() + ":" + std::to_string(line_no) +
                                      ": malformed manifest line");
    e.role = role == "train" ? Role::kTrain : Role::kTest;
    e.original = base / original;
    e.labels = base / labels;
    e.contours = base / contours;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace usqz::phantom
