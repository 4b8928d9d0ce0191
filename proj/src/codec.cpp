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

#include "usqz/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <limits>
#include <string>

#include "usqz/error.hpp"

namespace usqz::codec {
namespace {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* field) {
    need(1, field);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* field) {
    need(2, field);
    const auto v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* field) {
    need(n, field);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const { return pos_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorCode::kTruncatedFile, std::string("reading ") + field + " at byte offset " +
                                                 std::to_string(pos_) + ": need " +
                                                 std::to_string(n) + " bytes, " +
                                                 std::to_string(bytes_.size() - pos_) + " left");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t packed_move_bytes(std::size_t num_moves) { return (num_moves + 3) / 4; }

}  // namespace

ChainCode encode_contour(std::span<const int> radii, ClassId class_id) {
  if (radii.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty contour");
  if (radii.size() - 1 > std::numeric_limits<std::uint16_t>::max())
    throw Error(ErrorCode::kInvalidArgument, "contour has too many points");
  const std::size_t n = radii.size();
  for (std::size_t t = 0; t < n; ++t) {
    if (radii[t] < 0 || radii[t] > std::numeric_limits<std::uint16_t>::max())
      throw Error(ErrorCode::kRangeViolation,
                  "radius " + std::to_string(radii[t]) + " at scan line " + std::to_string(t));
    const int delta = radii[(t + 1) % n] - radii[t];
    if (!is_encodable_delta(delta))
      throw Error(ErrorCode::kUnencodableDelta,
                  "step " + std::to_string(delta) + " from scan line " + std::to_string(t) +
                      " to " + std::to_string((t + 1) % n));
  }

  ChainCode code;
  code.class_id = class_id;
  code.start_radius = static_cast<std::uint16_t>(radii[0]);
  code.moves.reserve(n - 1);
  for (std::size_t t = 1; t < n; ++t)
    code.moves.push_back(static_cast<Move>(radii[t] - radii[t - 1] + 1));
  return code;
}

std::vector<int> decode_contour(const ChainCode& code, int samples_per_line) {
  std::vector<int> radii;
  radii.reserve(code.moves.size() + 1);
  int r = code.start_radius;
  auto check = [&](std::size_t index) {
    if (r < 0 || r > samples_per_line - 1)
      throw Error(ErrorCode::kRangeViolation, "radius " + std::to_string(r) + " at point " +
                                                  std::to_string(index) + " outside [0, " +
                                                  std::to_string(samples_per_line - 1) + "]");
  };
  check(0);
  radii.push_back(r);
  for (std::size_t i = 0; i < code.moves.size(); ++i) {
    r += move_delta(code.moves[i]);
    check(i + 1);
    radii.push_back(r);
  }
  return radii;
}

std::size_t encoded_size(const CompressedHeader& header) {
  const std::size_t moves = header.num_scan_lines > 0 ? header.num_scan_lines - 1u : 0u;
  return kHeaderBytes +
         header.num_contours * (kContourPreambleBytes + packed_move_bytes(moves)) + kTrailerBytes;
}

std::vector<std::uint8_t> write_file(const CompressedFile& file) {
  const CompressedHeader& h = file.header;
  if (h.num_contours != file.contours.size())
    throw Error(ErrorCode::kInvalidHeader, "num_contours does not match contour list");
  if (h.acquisition_frequency_khz == 0 || h.num_scan_lines == 0 || h.samples_per_line == 0 ||
      h.cart_width == 0 || h.cart_height == 0)
    throw Error(ErrorCode::kInvalidHeader, "header counts must be nonzero");

  Writer w;
  for (auto b : kMagic) w.u8(b);
  w.u8(kVersion);
  w.u32(h.acquisition_frequency_khz);
  w.u16(h.num_scan_lines);
  w.u16(h.samples_per_line);
  w.u16(h.cart_width);
  w.u16(h.cart_height);
  w.u8(h.num_contours);

  for (const auto& c : file.contours) {
    if (c.moves.size() + 1 != h.num_scan_lines)
      throw Error(ErrorCode::kMalformedContour, "contour move count does not match scan lines");
    w.u8(c.class_id);
    w.u16(c.start_radius);
    w.u16(static_cast<std::uint16_t>(c.moves.size()));
    std::uint8_t byte = 0;
    int filled = 0;
    for (Move m : c.moves) {
      byte = static_cast<std::uint8_t>((byte << 2) | static_cast<std::uint8_t>(m));
      if (++filled == 4) {
        w.u8(byte);
        byte = 0;
        filled = 0;
      }
    }
    if (filled > 0) {
      for (; filled < 4; ++filled)
        byte = static_cast<std::uint8_t>((byte << 2) | static_cast<std::uint8_t>(Move::kStay));
      w.u8(byte);
    }
  }
  w.u32(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

ParseResult read_file_prefix(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(kMagic.size(), "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw Error(ErrorCode::kBadMagic, "byte offset 0: expected \"USQZ\"");
  const std::uint8_t version = r.u8("version");
  if (version != kVersion)
    throw Error(ErrorCode::kUnsupportedVersion,
                "byte offset 4: version " + std::to_string(version));

  ParseResult result;
  CompressedHeader& h = result.file.header;
  h.acquisition_frequency_khz = r.u32("acquisition_frequency");
  h.num_scan_lines = r.u16("num_scan_lines");
  h.samples_per_line = r.u16("samples_per_line");
  h.cart_width = r.u16("cart_width");
  h.cart_height = r.u16("cart_height");
  h.num_contours = r.u8("num_contours");
  if (h.acquisition_frequency_khz == 0 || h.num_scan_lines == 0 || h.samples_per_line == 0 ||
      h.cart_width == 0 || h.cart_height == 0)
    throw Error(ErrorCode::kInvalidHeader, "byte offset 5..16: header counts must be nonzero");

  for (int k = 0; k < h.num_contours; ++k) {
    const std::size_t at = r.offset();
    ChainCode c;
    c.class_id = r.u8("class_id");
    c.start_radius = r.u16("start_radius");
    const std::uint16_t num_moves = r.u16("num_moves");
    if (num_moves + 1u != h.num_scan_lines)
      throw Error(ErrorCode::kMalformedContour,
                  "byte offset " + std::to_string(at + 3) + ": contour " + std::to_string(k) +
                      " has " + std::to_string(num_moves) + " moves, expected " +
                      std::to_string(h.num_scan_lines - 1));
    const auto packed = r.take(packed_move_bytes(num_moves), "moves");
    c.moves.reserve(num_moves);
    for (std::size_t i = 0; i < num_moves; ++i) {
      const int shift = 6 - 2 * static_cast<int>(i % 4);
      c.moves.push_back(static_cast<Move>((packed[i / 4] >> shift) & 0b11));
    }
    result.file.contours.push_back(std::move(c));
  }

  const std::size_t body = r.offset();
  const std::uint32_t stored = r.u32("checksum");
  const std::uint32_t actual = crc32_of(bytes.first(body));
  if (stored != actual)
    throw Error(ErrorCode::kChecksumMismatch, "byte offset " + std::to_string(body) +
                                                  ": stored CRC-32 does not match contents");
  result.consumed = r.offset();
  return result;
}

CompressedFile read_file(std::span<const std::uint8_t> bytes) {
  ParseResult parsed = read_file_prefix(bytes);
  if (parsed.consumed != bytes.size())
    throw Error(ErrorCode::kTrailingData, "byte offset " + std::to_string(parsed.consumed) + ": " +
                                              std::to_string(bytes.size() - parsed.consumed) +
                                              " bytes after end of file");
  return std::move(parsed.file);
}

CompressedFile make_file(const ContourSet& contours, const ProbeGeometry& geometry,
                         std::uint32_t frequency_khz) {
  geometry.validate();
  if (contours.boundaries.size() > std::numeric_limits<std::uint8_t>::max())
    throw Error(ErrorCode::kInvalidArgument, "too many contours");
  CompressedFile file;
  file.header.acquisition_frequency_khz = frequency_khz;
  file.header.num_scan_lines = static_cast<std::uint16_t>(geometry.num_scan_lines);
  file.header.samples_per_line = static_cast<std::uint16_t>(geometry.samples_per_line);
  file.header.cart_width = static_cast<std::uint16_t>(geometry.cart_width);
  file.header.cart_height = static_cast<std::uint16_t>(geometry.cart_height);
  file.header.num_contours = static_cast<std::uint8_t>(contours.boundaries.size());
  for (const auto& b : contours.boundaries) {
    if (static_cast<int>(b.radii.size()) != geometry.num_scan_lines)
      throw Error(ErrorCode::kGeometryMismatch, "contour length differs from scan-line count");
    for (int r : b.radii)
      if (r > geometry.samples_per_line - 1)
        throw Error(ErrorCode::kRangeViolation, "contour radius beyond samples_per_line");
    file.contours.push_back(encode_contour(b.radii, b.class_id));
  }
  return file;
}

ContourSet decode_contours(const CompressedFile& file) {
  ContourSet out;
  for (std::size_t k = 0; k < file.contours.size(); ++k) {
    const ChainCode& code = file.contours[k];
    Contour c;
    c.class_id = code.class_id;
    c.radii = decode_contour(code, file.header.samples_per_line);
    if (!is_encodable_delta(c.radii.front() - c.radii.back()))
      throw Error(ErrorCode::kMalformedContour,
                  "contour " + std::to_string(k) + " does not close: ends at " +
                      std::to_string(c.radii.back()) + ", starts at " +
                      std::to_string(c.radii.front()));
    out.boundaries.push_back(std::move(c));
  }
  return out;
}

ProbeGeometry header_geometry(const CompressedHeader& header, const ProbeGeometry& base) {
  ProbeGeometry g = base;
  g.num_scan_lines = header.num_scan_lines;
  g.samples_per_line = header.samples_per_line;
  g.cart_width = header.cart_width;
  g.cart_height = header.cart_height;
  g.validate();
  return g;
}

double compression_ratio(const CompressedHeader& header, RatioMode mode) {
  const double raw_bits =
      static_cast<double>(header.samples_per_line) * header.num_scan_lines * 8.0;
  if (mode == RatioMode::kActual) return raw_bits / (8.0 * static_cast<double>(encoded_size(header)));
  const double per_contour = 2.0 * 16.0 + 2.0 * (header.num_scan_lines - 1.0);
  const double payload = header.num_contours * per_contour;
  return payload > 0.0 ? raw_bits / payload : std::numeric_limits<double>::infinity();
}

}  // namespace usqz::codec
