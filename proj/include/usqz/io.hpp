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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "usqz/array2d.hpp"
#include "usqz/grid.hpp"

namespace usqz::io {

/// 8-bit greyscale raster as stored in a binary PGM (P5) file. The optional
/// geometry comment carries the probe fields a PGM cannot express.
struct Pgm {
  Array2D<std::uint8_t> pixels;
  std::optional<ProbeGeometry> geometry;
};

[[nodiscard]] std::vector<std::uint8_t> encode_pgm(const Pgm& image);
[[nodiscard]] Pgm decode_pgm(std::span<const std::uint8_t> bytes);

[[nodiscard]] std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a partial file at `path`.
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// Polar frames and label maps are stored with one row per radial sample and
// one column per scan line. Label PGMs hold raw class ids (0 lumen, 1 media,
// 2 external, 255 background).
void write_polar_pgm(const std::filesystem::path& path, const PolarFrame& frame);
[[nodiscard]] PolarFrame read_polar_pgm(const std::filesystem::path& path,
                                        const ProbeGeometry& fallback = {});
void write_label_pgm(const std::filesystem::path& path, const LabelMap& labels);
[[nodiscard]] LabelMap read_label_pgm(const std::filesystem::path& path,
                                      const ProbeGeometry& fallback = {});
void write_cartesian_pgm(const std::filesystem::path& path, const CartesianFrame& frame);

}  // namespace usqz::io
