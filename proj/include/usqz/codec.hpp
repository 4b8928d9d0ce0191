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

namespace usqz::codec {

// File layout, all multi-byte integers big-endian:
//
//   offset  size  field
//   0       4     magic "USQZ"
//   4       1     version (1)
//   5       4     acquisition frequency, kHz
//   9       2     num_scan_lines
//   11      2     samples_per_line
//   13      2     cart_width
//   15      2     cart_height
//   17      1     num_contours
//   18      ...   contours, each:
//                   1  class id
//                   2  start radius
//                   2  num_moves
//                   ceil(num_moves / 4) bytes of 2-bit moves, first move in
//                   the two most significant bits, padded with 01
//   end-4   4     CRC-32 (zlib polynomial) of every preceding byte

inline constexpr std::array<std::uint8_t, 4> kMagic{'U', 'S', 'Q', 'Z'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 18;
inline constexpr std::size_t kContourPreambleBytes = 5;
inline constexpr std::size_t kTrailerBytes = 4;

/// 2-bit move symbols.
enum class Move : std::uint8_t { kDown = 0b00, kStay = 0b01, kUp = 0b10, kUpTwo = 0b11 };

[[nodiscard]] constexpr int move_delta(Move m) noexcept { return static_cast<int>(m) - 1; }

struct CompressedHeader {
  std::uint32_t acquisition_frequency_khz = 20000;
  std::uint16_t num_scan_lines = 256;
  std::uint16_t samples_per_line = 384;
  std::uint16_t cart_width = 768;
  std::uint16_t cart_height = 768;
  std::uint8_t num_contours = 0;

  bool operator==(const CompressedHeader&) const = default;
};

struct ChainCode {
  ClassId class_id = kLumen;
  std::uint16_t start_radius = 0;
  std::vector<Move> moves;

  bool operator==(const ChainCode&) const = default;
};

struct CompressedFile {
  CompressedHeader header;
  std::vector<ChainCode> contours;

  bool operator==(const CompressedFile&) const = default;
};

/// Throws kUnencodableDelta (with the scan line) if a circular step falls
/// outside {-1, 0, +1, +2}, kRangeViolation if a radius does not fit.
[[nodiscard]] ChainCode encode_contour(std::span<const int> radii, ClassId class_id = kLumen);

/// Cumulative sum from the start radius; kRangeViolation if any radius leaves
/// [0, samples_per_line - 1].
[[nodiscard]] std::vector<int> decode_contour(const ChainCode& code, int samples_per_line);

[[nodiscard]] std::vector<std::uint8_t> write_file(const CompressedFile& file);

struct ParseResult {
  CompressedFile file;
  std::size_t consumed = 0;
};

/// Parses one file from the front of `bytes` and reports its length.
[[nodiscard]] ParseResult read_file_prefix(std::span<const std::uint8_t> bytes);

/// Parses a buffer holding exactly one file; kTrailingData otherwise.
[[nodiscard]] CompressedFile read_file(std::span<const std::uint8_t> bytes);

[[nodiscard]] std::size_t encoded_size(const CompressedHeader& header);

/// Builds a file from a contour set; header counts come from `geometry`.
[[nodiscard]] CompressedFile make_file(const ContourSet& contours, const ProbeGeometry& geometry,
                                       std::uint32_t frequency_khz);

/// Decodes every chain code and checks that each contour closes.
[[nodiscard]] ContourSet decode_contours(const CompressedFile& file);

/// Geometry implied by the header; radial step and span come from `base`.
[[nodiscard]] ProbeGeometry header_geometry(const CompressedHeader& header,
                                            const ProbeGeometry& base = {});

enum class RatioMode { kPaper, kActual };

/// kPaper: raw polar bits over the chain-code payload alone, counting a 32-bit
/// start point and 2 bits per move for each contour. kActual: raw polar bits
/// over the full encoded file.
[[nodiscard]] double compression_ratio(const CompressedHeader& header, RatioMode mode);

}  // namespace usqz::codec
