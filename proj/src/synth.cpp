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

#include "usqz/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fft.hpp"
#include "usqz/codec.hpp"
#include "usqz/error.hpp"
#include "usqz/random.hpp"

namespace usqz::synth {
namespace {

void normalize_energy(std::vector<double>& v) {
  double energy = 0.0;
  for (double x : v) energy += x * x;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& x : v) x *= scale;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

TissueEcho& class_entry(SimulationConfig& cfg, ClassId id) {
  for (auto& c : cfg.tissue.classes)
    if (c.id == id) return c;
  cfg.tissue.classes.push_back({id, 0.0, 0.0, 1.0});
  return cfg.tissue.classes.back();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TissueEchoParams TissueEchoParams::defaults() {
  return {{
      {kLumen, 0.05, 0.1, 1.0},
      {kMedia, 0.6, 0.8, 1.0},
      {kExternal, 0.35, 0.6, 1.0},
  }};
}

const TissueEcho* TissueEchoParams::find(ClassId id) const noexcept {
  for (const auto& c : classes)
    if (c.id == id) return &c;
  return nullptr;
}

void TissueEchoParams::validate() const {
  for (const auto& c : classes) {
    const std::string name(class_name(c.id));
    if (!(c.echogenicity >= 0.0))
      throw Error(ErrorCode::kInvalidArgument, name + ": echogenicity must be >= 0");
    if (!(c.attenuation_db_mhz_cm >= 0.0))
      throw Error(ErrorCode::kInvalidArgument, name + ": attenuation must be >= 0");
    if (!(c.scatterer_density > 0.0 && c.scatterer_density <= 1.0))
      throw Error(ErrorCode::kInvalidArgument, name + ": scatterer density must be in (0, 1]");
  }
}

void PsfSpec::validate() const {
  if (!(center_frequency_mhz > 0.0) || !(speed_of_sound_m_s > 0.0) || !(axial_sigma > 0.0) ||
      !(lateral_sigma > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "PSF parameters must be positive");
}

void SimulationConfig::validate() const {
  tissue.validate();
  psf.validate();
  if (!(dynamic_range_db > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dynamic range must be > 0");
  if (!(radial_step_mm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radial step must be > 0");
}

PsfKernel make_psf(const PsfSpec& spec, double radial_step_mm) {
  spec.validate();
  PsfKernel k;
  // Wavelength in mm is c[m/s] / f[MHz] * 1e-3; round-trip halves it.
  const double wavelength_mm = spec.speed_of_sound_m_s / spec.center_frequency_mhz * 1e-3;
  k.period_samples = wavelength_mm / (2.0 * radial_step_mm);

  const int ha = static_cast<int>(std::ceil(3.0 * spec.axial_sigma));
  const int hl = static_cast<int>(std::ceil(3.0 * spec.lateral_sigma));
  for (int z = -ha; z <= ha; ++z) {
    const double env = std::exp(-0.5 * (z * z) / (spec.axial_sigma * spec.axial_sigma));
    k.axial.push_back(env * std::cos(2.0 * std::numbers::pi * z / k.period_samples));
  }
  for (int x = -hl; x <= hl; ++x)
    k.lateral.push_back(std::exp(-0.5 * (x * x) / (spec.lateral_sigma * spec.lateral_sigma)));
  normalize_energy(k.axial);
  normalize_energy(k.lateral);
  return k;
}

SimulationConfig parse_config(const std::string& text) {
  SimulationConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string text_value = trim(line.substr(eq + 1));
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(text_value, &used);
      if (used != text_value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, where + ": bad number '" + text_value + "'");
    }

    bool matched = false;
    for (const auto& c : kClassTable) {
      const std::string prefix = std::string(c.name) + ".";
      if (key.rfind(prefix, 0) != 0) continue;
      const std::string field = key.substr(prefix.size());
      TissueEcho& e = class_entry(cfg, c.id);
      if (field == "echogenicity") e.echogenicity = value;
      else if (field == "attenuation_db_mhz_cm") e.attenuation_db_mhz_cm = value;
      else if (field == "scatterer_density") e.scatterer_density = value;
      else throw Error(ErrorCode::kInvalidArgument, where + ": unknown key '" + key + "'");
      matched = true;
    }
    if (matched) continue;
    if (key == "psf.center_frequency_mhz") cfg.psf.center_frequency_mhz = value;
    else if (key == "psf.speed_of_sound_m_s") cfg.psf.speed_of_sound_m_s = value;
    else if (key == "psf.axial_sigma") cfg.psf.axial_sigma = value;
    else if (key == "psf.lateral_sigma") cfg.psf.lateral_sigma = value;
    else if (key == "dynamic_range_db") cfg.dynamic_range_db = value;
    else if (key == "radial_step_mm") cfg.radial_step_mm = value;
    else throw Error(ErrorCode::kInvalidArgument, where + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_config(const SimulationConfig& cfg) {
  std::ostringstream out;
  for (const auto& c : cfg.tissue.classes) {
    const std::string n(class_name(c.id));
    out << n << ".echogenicity = " << num(c.echogenicity) << "\n";
    out << n << ".attenuation_db_mhz_cm = " << num(c.attenuation_db_mhz_cm) << "\n";
    out << n << ".scatterer_density = " << num(c.scatterer_density) << "\n";
  }
  out << "psf.center_frequency_mhz = " << num(cfg.psf.center_frequency_mhz) << "\n";
  out << "psf.speed_of_sound_m_s = " << num(cfg.psf.speed_of_sound_m_s) << "\n";
  out << "psf.axial_sigma = " << num(cfg.psf.axial_sigma) << "\n";
  out << "psf.lateral_sigma = " << num(cfg.psf.lateral_sigma) << "\n";
  out << "dynamic_range_db = " << num(cfg.dynamic_range_db) << "\n";
  out << "radial_step_mm = " << num(cfg.radial_step_mm) << "\n";
  return out.str();
}

Array2D<double> echogenicity_map(const LabelMap& labels, const TissueEchoParams& params) {
  const auto& l = labels.labels;
  Array2D<double> out(l.rows(), l.cols(), 0.0);
  // Lookup table avoids a search per pixel.
  std::array<const TissueEcho*, 256> table{};
  for (int id = 0; id < 256; ++id) table[id] = params.find(static_cast<ClassId>(id));
  const auto src = l.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == kBackground) continue;
    const TissueEcho* e = table[src[i]];
    if (!e)
      throw Error(ErrorCode::kUnknownClass,
                  "class id " + std::to_string(src[i]) + " has no echo parameters");
    dst[i] = e->echogenicity;
  }
  return out;
}

Array2D<double> attenuation_gain(const LabelMap& labels, const TissueEchoParams& params,
                                 double frequency_mhz, double radial_step_mm) {
  const auto& l = labels.labels;
  Array2D<double> out(l.rows(), l.cols(), 1.0);
  const double step_cm = radial_step_mm * 0.1;
  for (int t = 0; t < l.cols(); ++t) {
    double loss_db = 0.0;
    for (int r = 0; r < l.rows(); ++r) {
      out(r, t) = std::pow(10.0, -loss_db / 20.0);
      const ClassId id = l(r, t);
      if (id == kBackground) continue;
      const TissueEcho* e = params.find(id);
      if (!e)
        throw Error(ErrorCode::kUnknownClass, "class id " + std::to_string(id) + " has no echo parameters");
      loss_db += e->attenuation_db_mhz_cm * frequency_mhz * step_cm;
    }
  }
  return out;
}

Array2D<double> scatterer_field(const Array2D<double>& amplitude, const Array2D<double>& density,
                                std::uint64_t seed) {
  if (amplitude.rows() != density.rows() || amplitude.cols() != density.cols())
    throw Error(ErrorCode::kGeometryMismatch, "amplitude and density maps differ in size");
  Rng rng(seed);
  Array2D<double> out(amplitude.rows(), amplitude.cols(), 0.0);
  const auto a = amplitude.values();
  const auto d = density.values();
  auto o = out.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = rng.uniform();
    const double z = rng.normal();
    if (u < d[i]) o[i] = a[i] * z;
  }
  return out;
}

Array2D<double> scatterer_field(const Array2D<double>& amplitude, double density,
                                std::uint64_t seed) {
  return scatterer_field(amplitude, Array2D<double>(amplitude.rows(), amplitude.cols(), density),
                         seed);
}

Array2D<double> convolve_psf(const Array2D<double>& field, const PsfKernel& kernel) {
  const int nr = field.rows();
  const int nt = field.cols();
  const int hl = static_cast<int>(kernel.lateral.size() / 2);
  const int ha = static_cast<int>(kernel.axial.size() / 2);

  Array2D<double> lateral(nr, nt, 0.0);
  for (int r = 0; r < nr; ++r) {
    const auto in = field.row(r);
    auto out = lateral.row(r);
    for (int t = 0; t < nt; ++t) {
      double acc = 0.0;
      for (int k = -hl; k <= hl; ++k) {
        int src = (t - k) % nt;
        if (src < 0) src += nt;
        acc += kernel.lateral[k + hl] * in[src];
      }
      out[t] = acc;
    }
  }

  Array2D<double> out(nr, nt, 0.0);
  for (int r = 0; r < nr; ++r) {
    auto dst = out.row(r);
    for (int k = -ha; k <= ha; ++k) {
      const int src = r - k;
      if (src < 0 || src >= nr) continue;
      const double w = kernel.axial[k + ha];
      const auto in = lateral.row(src);
      for (int t = 0; t < nt; ++t) dst[t] += w * in[t];
    }
  }
  return out;
}

Array2D<double> envelope(const Array2D<double>& rf) {
  const int nr = rf.rows();
  const int nt = rf.cols();
  const std::size_t n = detail::next_pow2(static_cast<std::size_t>(nr));
  Array2D<double> out(nr, nt, 0.0);
  std::vector<std::complex<double>> buf(n);
  for (int t = 0; t < nt; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (int r = 0; r < nr; ++r) buf[r] = rf(r, t);
    detail::fft(buf, false);
    // Analytic-signal spectrum: keep DC and Nyquist, double positive
    // frequencies, drop negative ones.
    for (std::size_t k = 1; k < n / 2; ++k) buf[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = 0.0;
    detail::fft(buf, true);
    for (int r = 0; r < nr; ++r) {
      const double re = rf(r, t);
      const double im = buf[r].imag();
      out(r, t) = std::sqrt(re * re + im * im);
    }
  }
  return out;
}

PolarFrame log_compress(const Array2D<double>& env, const ProbeGeometry& geometry,
                        double dynamic_range_db) {
  if (env.rows() != geometry.samples_per_line || env.cols() != geometry.num_scan_lines)
    throw Error(ErrorCode::kGeometryMismatch, "envelope size differs from geometry");
  PolarFrame out(geometry, 0);
  double peak = 0.0;
  for (double v : env.values()) peak = std::max(peak, v);
  if (!(peak > 0.0)) return out;
  const auto src = env.values();
  auto dst = out.samples.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!(src[i] > 0.0)) continue;
    const double db = 20.0 * std::log10(src[i] / peak);
    const double level = 255.0 * (db + dynamic_range_db) / dynamic_range_db;
    dst[i] = static_cast<std::uint8_t>(std::lround(std::clamp(level, 0.0, 255.0)));
  }
  return out;
}

double inverse_log_compress(std::uint8_t level, double dynamic_range_db) noexcept {
  const double db = level / 255.0 * dynamic_range_db - dynamic_range_db;
  return std::pow(10.0, db / 20.0);
}

Array2D<double> simulate_envelope(const LabelMap& labels, const TissueEchoParams& params,
                                  const PsfSpec& psf, std::uint64_t seed) {
  labels.geometry.validate();
  params.validate();
  const PsfKernel kernel = make_psf(psf, labels.geometry.radial_step_mm);
  Array2D<double> amplitude = echogenicity_map(labels, params);
  const Array2D<double> gain = attenuation_gain(labels, params, psf.center_frequency_mhz,
                                                labels.geometry.radial_step_mm);
  Array2D<double> density(amplitude.rows(), amplitude.cols(), 1.0);
  {
    auto a = amplitude.values();
    auto d = density.values();
    const auto g = gain.values();
    const auto l = labels.labels.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] *= g[i];
      if (const TissueEcho* e = params.find(l[i])) d[i] = e->scatterer_density;
    }
  }
  return envelope(convolve_psf(scatterer_field(amplitude, density, seed), kernel));
}

PolarFrame simulate_bmode(const LabelMap& labels, const TissueEchoParams& params,
                          const PsfSpec& psf, double dynamic_range_db, std::uint64_t seed) {
  return log_compress(simulate_envelope(labels, params, psf, seed), labels.geometry,
                      dynamic_range_db);
}

PolarFrame decompress_polar(std::span<const std::uint8_t> file_bytes,
                            const SimulationConfig& config, std::uint64_t seed,
                            const Refiner& refiner) {
  config.validate();
  const codec::CompressedFile file = codec::read_file(file_bytes);
  ProbeGeometry base;
  base.radial_step_mm = config.radial_step_mm;
  const ProbeGeometry geometry = codec::header_geometry(file.header, base);
  const ContourSet contours = codec::decode_contours(file);
  // A file without contours carries no tissue: everything is background.
  const LabelMap labels = rasterize_contours(
      contours, geometry, contours.boundaries.empty() ? kBackground : kExternal);
  PsfSpec psf = config.psf;
  psf.center_frequency_mhz = file.header.acquisition_frequency_khz / 1000.0;
  return refiner.refine(
      simulate_bmode(labels, config.tissue, psf, config.dynamic_range_db, seed));
}

CartesianFrame decompress(std::span<const std::uint8_t> file_bytes,
                          const SimulationConfig& config, std::uint64_t seed,
                          const Refiner& refiner) {
  return polar_to_cartesian(decompress_polar(file_bytes, config, seed, refiner));
}

}  // namespace usqz::synth
