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

#include <doctest.h>

#include <filesystem>
#include <set>

#include "usqz/codec.hpp"
#include "usqz/error.hpp"
#include "usqz/io.hpp"
#include "usqz/phantom.hpp"
#include "usqz/random.hpp"

using namespace usqz;
using namespace usqz::phantom;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

fs::path scratch_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "usqz_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("phantom") {

TEST_CASE("unperturbed spec gives constant rings") {
  PhantomSpec spec;
  spec.lumen = {80.0, {}};
  spec.media = {130.0, {}};
  const Phantom p = generate_phantom(spec, 1);
  REQUIRE(p.contours.boundaries.size() == 2);
  for (int r : p.contours.boundaries[0].radii) CHECK(r == 80);
  for (int r : p.contours.boundaries[1].radii) CHECK(r == 130);
  for (int t = 0; t < spec.geometry.num_scan_lines; ++t) {
    CHECK(p.labels.labels(79, t) == kLumen);
    CHECK(p.labels.labels(80, t) == kMedia);
    CHECK(p.labels.labels(129, t) == kMedia);
    CHECK(p.labels.labels(130, t) == kExternal);
  }
}

TEST_CASE("steep profiles are infeasible") {
  PhantomSpec spec;
  // Slope 30 * 8 * 2pi / 256 is about 5.9 samples per scan line.
  spec.lumen = {100.0, {{30.0, 8, 0.0}}};
  spec.media = {200.0, {}};
  CHECK(code_of([&] { (void)generate_phantom(spec, 1); }) == ErrorCode::kInfeasibleSpec);

  PhantomSpec crossing;
  crossing.lumen = {100.0, {{20.0, 1, 0.0}}};
  crossing.media = {110.0, {}};
  CHECK(code_of([&] { (void)generate_phantom(crossing, 1); }) == ErrorCode::kInfeasibleSpec);

  PhantomSpec outside;
  outside.media = {400.0, {}};
  CHECK(code_of([&] { (void)generate_phantom(outside, 1); }) == ErrorCode::kInfeasibleSpec);

  PhantomSpec catheter;
  catheter.lumen = {5.0, {}};
  catheter.dead_zone = 10;
  CHECK(code_of([&] { (void)generate_phantom(catheter, 1); }) == ErrorCode::kInfeasibleSpec);
}

TEST_CASE("random specs satisfy the contour invariants and encode") {
  const DatasetOptions o;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const PhantomSpec spec = random_spec(o, derive_seed(99, s));
    const Phantom p = generate_phantom(spec, s);
    REQUIRE(satisfies_contour_invariants(p.contours, spec.geometry));
    const auto file = codec::make_file(p.contours, spec.geometry, 20000);
    REQUIRE(codec::decode_contours(codec::read_file(codec::write_file(file))) == p.contours);
    for (const auto& b : p.contours.boundaries)
      for (int r : b.radii) REQUIRE(r > o.dead_zone);
  }
}

TEST_CASE("label noise only touches tissue") {
  PhantomSpec spec;
  spec.dead_zone = 10;
  spec.label_noise = 0.3;
  const Phantom p = generate_phantom(spec, 7);
  const Phantom clean = generate_phantom({spec.geometry, spec.lumen, spec.media, 10, 0.0}, 7);
  std::size_t changed = 0, tissue = 0;
  for (int r = 0; r < spec.geometry.samples_per_line; ++r) {
    for (int t = 0; t < spec.geometry.num_scan_lines; ++t) {
      const ClassId v = p.labels.labels(r, t);
      if (r < 10) {
        REQUIRE(v == kBackground);
        continue;
      }
      REQUIRE(is_tissue_class(v));
      ++tissue;
      changed += v != clean.labels.labels(r, t);
    }
  }
  // A replaced label keeps its class a third of the time.
  const double rate = static_cast<double>(changed) / static_cast<double>(tissue);
  CHECK(rate == doctest::Approx(0.2).epsilon(0.05));
  CHECK(generate_phantom(spec, 7).labels.labels == p.labels.labels);
}

TEST_CASE("dataset split and determinism") {
  DatasetOptions o;
  o.geometry.num_scan_lines = 64;
  o.geometry.samples_per_line = 256;
  o.geometry.cart_width = o.geometry.cart_height = 512;
  o.lumen_base_min = 50;
  o.lumen_base_max = 80;
  const auto a = generate_dataset(10, o, 3);
  REQUIRE(a.size() == 10);
  int train = 0;
  for (const auto& it : a) {
    train += it.role == Role::kTrain;
    CHECK(satisfies_contour_invariants(it.phantom.contours, o.geometry));
  }
  CHECK(train == 9);
  CHECK(a.back().role == Role::kTest);
  CHECK(generate_dataset(2, o, 3)[1].role == Role::kTest);
  CHECK(code_of([&] { (void)generate_dataset(1, o, 3); }) == ErrorCode::kInvalidArgument);

  const auto b = generate_dataset(10, o, 3);
  for (int i = 0; i < 10; ++i) {
    CHECK(a[i].original.samples == b[i].original.samples);
    CHECK(a[i].phantom.contours == b[i].phantom.contours);
  }
  CHECK(generate_dataset(10, o, 4)[0].original.samples != a[0].original.samples);
}

TEST_CASE("written datasets are byte-identical on regeneration") {
  DatasetOptions o;
  o.geometry.num_scan_lines = 64;
  o.geometry.samples_per_line = 192;
  o.geometry.cart_width = o.geometry.cart_height = 384;
  o.lumen_base_min = 40;
  o.lumen_base_max = 60;
  const fs::path a = scratch_dir("dataset_a");
  const fs::path b = scratch_dir("dataset_b");
  write_dataset(a, generate_dataset(3, o, 11));
  const auto manifest = write_dataset(b, generate_dataset(3, o, 11));

  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) {
    names.insert(e.path().filename().string());
    CHECK(io::read_bytes(e.path()) == io::read_bytes(b / e.path().filename()));
  }
  CHECK(names.size() == 10);

  const auto entries = read_manifest(manifest);
  REQUIRE(entries.size() == 3);
  CHECK(entries[2].role == Role::kTest);
  const LabelMap labels = io::read_label_pgm(entries[0].labels);
  CHECK(labels.geometry == o.geometry);
  const auto file = codec::read_file(io::read_bytes(entries[0].contours));
  CHECK(rasterize_contours(codec::decode_contours(file), o.geometry).labels.values().size() ==
        labels.labels.values().size());
  fs::remove_all(fs::temp_directory_path() / "usqz_tests");
}

TEST_CASE("malformed manifest") {
  const fs::path d = scratch_dir("manifest");
  io::write_text(d / "manifest.txt", "0 train a.pgm\n");
  CHECK(code_of([&] { (void)read_manifest(d / "manifest.txt"); }) == ErrorCode::kIo);
  CHECK(code_of([&] { (void)read_manifest(d / "missing.txt"); }) == ErrorCode::kIo);
  fs::remove_all(d);
}

}  // TEST_SUITE
