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
#include <span>
#include <string>
#include <vector>

#include "usqz/array2d.hpp"
#include "usqz/grid.hpp"

namespace usqz::synth {

inline constexpr double kDefaultDynamicRangeDb = 50.0;

struct TissueEcho {
  ClassId id = kLumen;
  double echogenicity = 0.0;             // mean scatterer amplitude, linear
  double attenuation_db_mhz_cm = 0.0;
  double scatterer_density = 1.0;        // fraction of occupied sites, (0, 1]

  bool operator==(const TissueEcho&) const = default;
};

struct TissueEchoParams {
  std::vector<TissueEcho> classes;

  [[nodiscard]] static TissueEchoParams defaults();
  [[nodiscard]] const TissueEcho* find(ClassId id) const noexcept;
  void validate() const;
  bool operator==(const TissueEchoParams&) const = default;
};

struct PsfSpec {
  double center_frequency_mhz = 20.0;
  double speed_of_sound_m_s = 1540.0;
  double axial_sigma = 2.0;    // samples
  double lateral_sigma = 3.0;  // scan lines

  void validate() const;
  bool operator==(const PsfSpec&) const = default;
};

/// Separable kernel: axial Gaussian-enveloped cosine times lateral Gaussian,
/// each factor with unit energy so the product has unit energy.
struct PsfKernel {
  std::vector<double> axial;
  std::vector<double> lateral;
  double period_samples = 0.0;
};

/// Axial oscillation period is (c / f) / (2 * radial_step) samples.
[[nodiscard]] PsfKernel make_psf(const PsfSpec& spec, double radial_step_mm);

/// Everything the decompressor needs beyond the compressed file.
struct SimulationConfig {
  TissueEchoParams tissue = TissueEchoParams::defaults();
  PsfSpec psf;
  double dynamic_range_db = kDefaultDynamicRangeDb;
  double radial_step_mm = 0.01;

  void validate() const;
  bool operator==(const SimulationConfig&) const = default;
};

/// key = value text; '#' starts a comment. Unknown keys are errors.
[[nodiscard]] SimulationConfig parse_config(const std::string& text);
[[nodiscard]] SimulationConfig load_config(const std::filesystem::path& path);
[[nodiscard]] std::string format_config(const SimulationConfig& config);

/// Per-pixel echogenicity; background maps to 0, unknown ids raise
/// kUnknownClass.
[[nodiscard]] Array2D<double> echogenicity_map(const LabelMap& labels,
                                               const TissueEchoParams& params);

/// Cumulative one-way amplitude attenuation along each scan line:
/// exp(-integral of alpha * f over depth), with alpha per tissue class.
[[nodiscard]] Array2D<double> attenuation_gain(const LabelMap& labels,
                                               const TissueEchoParams& params,
                                               double frequency_mhz, double radial_step_mm);

/// Sites are occupied with probability `density`; an occupied site holds
/// amplitude(site) * N(0, 1). Always consumes the same number of random
/// draws per site, so the field is a pure function of the seed.
[[nodiscard]] Array2D<double> scatterer_field(const Array2D<double>& amplitude,
                                              const Array2D<double>& density, std::uint64_t seed);
[[nodiscard]] Array2D<double> scatterer_field(const Array2D<double>& amplitude, double density,
                                              std::uint64_t seed);

/// 2-D convolution, circular across scan lines and zero-padded in depth.
[[nodiscard]] Array2D<double> convolve_psf(const Array2D<double>& field, const PsfKernel& kernel);

/// |analytic signal| along each scan line. The real part is the input
/// itself, so envelope >= |rf| holds pointwise.
[[nodiscard]] Array2D<double> envelope(const Array2D<double>& rf);

/// Maps [max / 10^(dyn/20), max] onto [0, 255]; an all-zero envelope gives an
/// all-zero frame.
[[nodiscard]] PolarFrame log_compress(const Array2D<double>& envelope,
                                      const ProbeGeometry& geometry, double dynamic_range_db);

/// Inverse of log_compress up to the frame maximum (taken as 1).
[[nodiscard]] double inverse_log_compress(std::uint8_t level, double dynamic_range_db) noexcept;

/// Scatterers through PSF and envelope detection, before log compression.
[[nodiscard]] Array2D<double> simulate_envelope(const LabelMap& labels,
                                                const TissueEchoParams& params,
                                                const PsfSpec& psf, std::uint64_t seed);

[[nodiscard]] PolarFrame simulate_bmode(const LabelMap& labels, const TissueEchoParams& params,
                                        const PsfSpec& psf, double dynamic_range_db,
                                        std::uint64_t seed);

/// Post-simulation stage acting on the polar frame. A learned refiner
/// (for example an image-to-image generator) can be attached here.
class Refiner {
 public:
  virtual ~Refiner() = default;
  [[nodiscard]] virtual PolarFrame refine(const PolarFrame& frame) const = 0;
};

class IdentityRefiner final : public Refiner {
 public:
  [[nodiscard]] PolarFrame refine(const PolarFrame& frame) const override { return frame; }
};

/// Decoded file -> label map -> simulated B-mode in the probe's polar grid.
/// The PSF centre frequency comes from the file header.
[[nodiscard]] PolarFrame decompress_polar(std::span<const std::uint8_t> file_bytes,
                                          const SimulationConfig& config, std::uint64_t seed,
                                          const Refiner& refiner = IdentityRefiner{});

/// decompress_polar followed by scan conversion to the header's frame size.
[[nodiscard]] CartesianFrame decompress(std::span<const std::uint8_t> file_bytes,
                                        const SimulationConfig& config, std::uint64_t seed,
                                        const Refiner& refiner = IdentityRefiner{});

}  // namespace usqz::synth
