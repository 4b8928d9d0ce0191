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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "usqz/grid.hpp"
#include "usqz/synth.hpp"

namespace usqz::phantom {

struct Harmonic {
  double amplitude = 0.0;  // samples
  int frequency = 1;       // cycles per revolution
  double phase = 0.0;      // radians
};

/// radius(theta) = base + sum of amplitude * sin(frequency * theta + phase).
struct RadiusProfile {
  double base = 0.0;
  std::vector<Harmonic> harmonics;

  [[nodiscard]] double at(double theta) const noexcept;
};

struct PhantomSpec {
  ProbeGeometry geometry;
  RadiusProfile lumen{100.0, {}};
  RadiusProfile media{140.0, {}};
  /// Samples nearer than this to the catheter are background.
  int dead_zone = 0;
  /// Fraction of tissue labels replaced by a random tissue class.
  double label_noise = 0.0;
};

struct Phantom {
  ContourSet contours;
  LabelMap labels;
};

/// Deterministic per seed (the seed only drives label noise). Throws
/// kInfeasibleSpec if a rounded profile steps by more than 2 samples between
/// scan lines, if the boundaries cross, or if they leave the frame.
[[nodiscard]] Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

struct DatasetOptions {
  ProbeGeometry geometry;
  double lumen_base_min = 90.0;
  double lumen_base_max = 140.0;
  double media_thickness_min = 30.0;
  double media_thickness_max = 60.0;
  int max_harmonics = 3;
  int max_frequency = 8;
  /// Upper bound on the harmonic slope, samples per scan line.
  double slope_budget = 0.9;
  int dead_zone = 10;
  /// Relative spread of per-item tissue echogenicity around the config.
  double echo_jitter = 0.05;
  /// Standard deviation of additive noise on the 8-bit originals.
  double intensity_noise = 2.0;
  std::uint32_t frequency_khz = 20000;
  synth::SimulationConfig simulation;
};

enum class Role { kTrain, kTest };

[[nodiscard]] std::string_view role_name(Role role) noexcept;

struct DatasetItem {
  int id = 0;
  Role role = Role::kTrain;
  PhantomSpec spec;
  Phantom phantom;
  synth::TissueEchoParams tissue;
  std::uint32_t frequency_khz = 20000;
  PolarFrame original;
};

/// Draws a random spec within the option ranges.
[[nodiscard]] PhantomSpec random_spec(const DatasetOptions& options, std::uint64_t seed);

/// n >= 2 items; the last max(1, n / 10) are held out for testing.
[[nodiscard]] std::vector<DatasetItem> generate_dataset(int n, const DatasetOptions& options,
                                                        std::uint64_t seed);

struct ManifestEntry {
  int id = 0;
  Role role = Role::kTrain;
  std::filesystem::path original;
  std::filesystem::path labels;
  std::filesystem::path contours;
};

/// Writes frames, label maps and ground-truth contour files plus
/// `manifest.txt` into `dir`. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const std::vector<DatasetItem>& items);

/// Paths in the result are resolved against the manifest's directory.
[[nodiscard]] std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace usqz::phantom
