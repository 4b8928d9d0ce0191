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

#include "usqz/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "usqz/error.hpp"

namespace usqz::io {
namespace {

constexpr std::string_view kGeometryTag = "usqz-geometry";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string geometry_comment(const ProbeGeometry& g) {
  return "# " + std::string(kGeometryTag) + " cart_width=" + std::to_string(g.cart_width) +
         " cart_height=" + std::to_string(g.cart_height) +
         " radial_step_mm=" + format_double(g.radial_step_mm) +
         " angular_span=" + format_double(g.angular_span) + "\n";
}

void parse_geometry_comment(const std::string& line, ProbeGeometry& g) {
  std::istringstream in(line);
  std::string tok;
  in >> tok;
  if (tok != kGeometryTag) return;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    try {
      if (key == "cart_width") g.cart_width = std::stoi(value);
      else if (key == "cart_height") g.cart_height = std::stoi(value);
      else if (key == "radial_step_mm") g.radial_step_mm = std::stod(value);
      else if (key == "angular_span") g.angular_span = std::stod(value);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIo, "bad geometry comment value '" + tok + "'");
    }
  }
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Returns the next whitespace-delimited token, collecting comment lines.
  std::string token() {
    for (;;) {
      while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
      if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
        std::string line;
        ++pos_;
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') line.push_back(char(bytes_[pos_++]));
        comments.push_back(line);
        continue;
      }
      break;
    }
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
      tok.push_back(char(bytes_[pos_++]));
    if (tok.empty()) throw Error(ErrorCode::kIo, "truncated PGM header");
    return tok;
  }

  int integer() {
    const std::string tok = token();
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw Error(ErrorCode::kIo, "bad PGM header field '" + tok + "'");
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() const { return pos_ + 1; }

  std::vector<std::string> comments;

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

ProbeGeometry polar_geometry(const Pgm& pgm, const ProbeGeometry& fallback) {
  ProbeGeometry g = pgm.geometry.value_or(fallback);
  g.num_scan_lines = pgm.pixels.cols();
  g.samples_per_line = pgm.pixels.rows();
  g.validate();
  return g;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const Pgm& image) {
  std::string header = "P5\n";
  if (image.geometry) header += geometry_comment(*image.geometry);
  header += std::to_string(image.pixels.cols()) + " " + std::to_string(image.pixels.rows()) +
            "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto px = image.pixels.values();
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

Pgm decode_pgm(std::span<const std::uint8_t> bytes) {
  HeaderReader reader(bytes);
  if (reader.token() != "P5") throw Error(ErrorCode::kIo, "not a binary PGM (P5) file");
  const int width = reader.integer();
  const int height = reader.integer();
  const int maxval = reader.integer();
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kIo, "PGM has empty dimensions");
  if (maxval != 255) throw Error(ErrorCode::kIo, "only 8-bit PGM (maxval 255) is supported");
  const std::size_t offset = reader.raster_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (offset > bytes.size() || bytes.size() - offset < need)
    throw Error(ErrorCode::kIo, "PGM raster truncated");

  Pgm out;
  out.pixels = Array2D<std::uint8_t>(height, width);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset), need, out.pixels.values().begin());
  for (const auto& c : reader.comments) {
    std::string trimmed = c;
    trimmed.erase(0, trimmed.find_first_not_of(' '));
    if (trimmed.rfind(kGeometryTag, 0) == 0) {
      ProbeGeometry g;
      parse_geometry_comment(trimmed, g);
      out.geometry = g;
    }
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for '" + path.string() + "'");
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot create '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_polar_pgm(const std::filesystem::path& path, const PolarFrame& frame) {
  write_bytes(path, encode_pgm({frame.samples, frame.geometry}));
}

PolarFrame read_polar_pgm(const std::filesystem::path& path, const ProbeGeometry& fallback) {
  Pgm pgm = decode_pgm(read_bytes(path));
  PolarFrame frame;
  frame.geometry = polar_geometry(pgm, fallback);
  frame.samples = std::move(pgm.pixels);
  return frame;
}

void write_label_pgm(const std::filesystem::path& path, const LabelMap& labels) {
  write_bytes(path, encode_pgm({labels.labels, labels.geometry}));
}

LabelMap read_label_pgm(const std::filesystem::path& path, const ProbeGeometry& fallback) {
  Pgm pgm = decode_pgm(read_bytes(path));
  LabelMap out;
  out.geometry = polar_geometry(pgm, fallback);
  for (const auto v : pgm.pixels.values())
    if (v != kBackground && !is_tissue_class(v))
      throw Error(ErrorCode::kUnknownClass,
                  "label file '" + path.string() + "' holds class id " + std::to_string(v));
  out.labels = std::move(pgm.pixels);
  return out;
}

void write_cartesian_pgm(const std::filesystem::path& path, const CartesianFrame& frame) {
  write_bytes(path, encode_pgm({frame.pixels, std::nullopt}));
}

}  // namespace usqz::io
