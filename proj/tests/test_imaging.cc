// Copyright 2026 The dualres Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <png.h>

#include <fstream>
#include <random>

#include "doctest.h"
#include "dualres/errors.h"
#include "dualres/image.h"
#include "dualres/jpeg.h"
#include "dualres/patches.h"
#include "test_support.h"

namespace dualres {
namespace {

using testing::TempDir;

void WriteRgbPng(const std::filesystem::path& path, int w, int h,
                 const std::vector<unsigned char>& rgb, bool alpha = false) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr));
}

void WritePgm(const std::filesystem::path& path, const std::string& header,
              const std::vector<unsigned char>& raster) {
  std::ofstream out(path, std::ios::binary);
  out << header;
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
}

TEST_CASE("load_luma converts RGB with BT.601 full-range weights") {
  TempDir dir("luma");
  WriteRgbPng(dir / "white.png", 2, 1, {255, 255, 255, 255, 255, 255});
  WriteRgbPng(dir / "red.png", 1, 1, {255, 0, 0});
  WriteRgbPng(dir / "mix.png", 1, 1, {10, 200, 30});
  const ImagePlane white = LoadLuma(dir / "white.png");
  CHECK(white.width == 2);
  CHECK(white.height == 1);
  CHECK(white.at(0, 0) == doctest::Approx(255.0).epsilon(1e-12));
  CHECK(LoadLuma(dir / "red.png").at(0, 0) == doctest::Approx(76.245).epsilon(1e-12));
  CHECK(LoadLuma(dir / "mix.png").at(0, 0) ==
        doctest::Approx(0.299 * 10 + 0.587 * 200 + 0.114 * 30).epsilon(1e-12));
}

TEST_CASE("load_luma ignores alpha") {
  TempDir dir("alpha");
  WriteRgbPng(dir / "a.png", 1, 1, {0, 0, 255, 7}, /*alpha=*/true);
  CHECK(LoadLuma(dir / "a.png").at(0, 0) == doctest::Approx(0.114 * 255).epsilon(1e-12));
}

TEST_CASE("load_luma reads binary PGM") {
  TempDir dir("pgm");
  WritePgm(dir / "flat.pgm", "P5\n4 3\n255\n", std::vector<unsigned char>(12, 128));
  const ImagePlane flat = LoadLuma(dir / "flat.pgm");
  CHECK(flat.width == 4);
  CHECK(flat.height == 3);
  for (double v : flat.samples) CHECK(v == 128.0);

  WritePgm(dir / "comment.pgm", "P5\n# made by hand\n2 1\n255\n", {3, 250});
  const ImagePlane c = LoadLuma(dir / "comment.pgm");
  CHECK(c.at(0, 0) == 3.0);
  CHECK(c.at(1, 0) == 250.0);

  WritePgm(dir / "deep.pgm", "P5\n1 1\n65535\n", {0, 1});
  CHECK_THROWS_AS(LoadLuma(dir / "deep.pgm"), DecodeError);
  WritePgm(dir / "short.pgm", "P5\n4 4\n255\n", {1, 2, 3});
  CHECK_THROWS_AS(LoadLuma(dir / "short.pgm"), DecodeError);
}

TEST_CASE("load_luma errors name the path") {
  TempDir dir("bad");
  const auto missing = dir / "missing.png";
  try {
    LoadLuma(missing);
    FAIL("expected a decode error");
  } catch (const DecodeError& e) {
    CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
  }
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(LoadLuma(dir / "junk.png"), DecodeError);
  std::ofstream(dir / "x.bmp") << "BM";
  CHECK_THROWS_AS(LoadLuma(dir / "x.bmp"), DecodeError);
}

TEST_CASE("save_luma rounds half away from zero and clamps") {
  TempDir dir("save");
  ImagePlane p(5, 1);
  p.samples = {127.5, 255.4, -3.0, 0.49, 300.0};
  SaveLuma(p, dir / "p.png");
  const ImagePlane q = LoadLuma(dir / "p.png");
  CHECK(q.samples == std::vector<double>{128, 255, 0, 0, 255});
}

TEST_CASE("save then load is the identity on integer planes") {
  TempDir dir("roundtrip");
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    std::uniform_int_distribution<int> side(1, 40);
    const ImagePlane p = testing::RandomIntegerPlane(rng, side(rng), side(rng));
    SaveLuma(p, dir / "r.png");
    CHECK(LoadLuma(dir / "r.png") == p);
  }
}

TEST_CASE("save_luma leaves no partial file on failure") {
  TempDir dir("atomic");
  const auto target = dir / "missing_subdir" / "out.png";
  CHECK_THROWS_AS(SaveLuma(ImagePlane(8, 8, 1.0), target), IoError);
  CHECK_FALSE(std::filesystem::exists(target));
  CHECK_FALSE(std::filesystem::exists(target.string() + ".partial"));
}

TEST_CASE("pad_to_block_multiple replicates edges") {
  SUBCASE("already aligned") {
    ImagePlane p(56, 56, 3.0);
    const PaddedPlane r = PadToBlockMultiple(p);
    CHECK(r.plane == p);
    CHECK(r.original_width == 56);
    CHECK(r.original_height == 56);
  }
  SUBCASE("one extra column") {
    std::mt19937_64 rng(2);
    const ImagePlane p = testing::RandomPlane(rng, 57, 56);
    const PaddedPlane r = PadToBlockMultiple(p);
    REQUIRE(r.plane.width == 64);
    REQUIRE(r.plane.height == 56);
    for (int y = 0; y < 56; ++y) {
      for (int x = 56; x < 64; ++x) CHECK(r.plane.at(x, y) == p.at(56, y));
    }
  }
  SUBCASE("single pixel") {
    const PaddedPlane r = PadToBlockMultiple(ImagePlane(1, 1, 42.0));
    CHECK(r.plane == ImagePlane(8, 8, 42.0));
  }
}

TEST_CASE("padding then cropping is the identity") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> side(1, 70);
  for (int i = 0; i < 100; ++i) {
    const ImagePlane p = testing::RandomPlane(rng, side(rng), side(rng));
    const PaddedPlane r = PadToBlockMultiple(p);
    CHECK(r.plane.width % 8 == 0);
    CHECK(r.plane.height % 8 == 0);
    CHECK(Crop(r.plane, 0, 0, r.original_width, r.original_height) == p);
  }
}

TEST_CASE("list_images is sorted and filters extensions") {
  TempDir dir("list");
  for (const char* name : {"b.png", "a.pgm", "c.txt", "A.PNG"}) {
    std::ofstream(dir / name) << "x";
  }
  const auto images = ListImages(dir.path());
  REQUIRE(images.size() == 3);
  CHECK(images[0].filename() == "A.PNG");
  CHECK(images[1].filename() == "a.pgm");
  CHECK(images[2].filename() == "b.png");
}

std::vector<NamedImage> SmallCorpus() {
  return {{"one", testing::NaturalishPlane(1, 80, 72)},
          {"two", testing::NaturalishPlane(2, 64, 96)},
          {"tiny", testing::NaturalishPlane(3, 40, 40)}};
}

TEST_CASE("sample_patches is deterministic for a seed") {
  const auto corpus = SmallCorpus();
  const PatchBatch a = SamplePatches(corpus, 56, 6, 20, 99);
  const PatchBatch b = SamplePatches(corpus, 56, 6, 20, 99);
  const PatchBatch c = SamplePatches(corpus, 56, 6, 20, 100);
  REQUIRE(a.patches.size() == 6);
  bool any_differs = false;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.patches[i].clean == b.patches[i].clean);
    CHECK(a.patches[i].degraded == b.patches[i].degraded);
    CHECK(a.patches[i].cdct.coeffs == b.patches[i].cdct.coeffs);
    any_differs |= !(a.patches[i].clean == c.patches[i].clean);
  }
  CHECK(any_differs);
}

TEST_CASE("sample_patches degrades each crop with its own block grid") {
  const auto corpus = SmallCorpus();
  const PatchBatch batch = SamplePatches(corpus, 56, 10, 20, 5);
  CHECK(batch.patch_size == 56);
  for (const Patch& p : batch.patches) {
    CHECK(p.clean.width == 56);
    CHECK(p.clean.height == 56);
    CHECK(p.degraded.width == 56);
    CHECK(p.degraded.height == 56);
    const Degraded direct = Degrade(p.clean, 20);
    CHECK(p.degraded == direct.degraded);
    CHECK(p.cdct.coeffs == direct.cdct.coeffs);
    CHECK(p.table.steps == LuminanceTable(20).steps);
    CHECK_FALSE(p.degraded == p.clean);
  }
}

TEST_CASE("sample_patches edge cases") {
  const auto corpus = SmallCorpus();
  CHECK(SamplePatches(corpus, 56, 0, 20, 1).patches.empty());
  CHECK_THROWS_AS(SamplePatches(corpus, 50, 1, 20, 1), ArgumentError);
  CHECK_THROWS_AS(SamplePatches(corpus, 0, 1, 20, 1), ArgumentError);
  CHECK_THROWS_AS(SamplePatches(corpus, 128, 1, 20, 1), ConfigError);
  CHECK_THROWS_AS(SamplePatches(std::span<const NamedImage>{}, 8, 1, 20, 1), ConfigError);
  CHECK_THROWS_AS(SamplePatches(corpus, 8, 1, 0, 1), ArgumentError);
  // Only the 40x40 image is too small for 48; every patch comes from the others.
  const PatchBatch b = SamplePatches(corpus, 48, 20, 50, 3);
  CHECK(b.patches.size() == 20);
}

TEST_CASE("sample_patches from paths matches preloaded images") {
  TempDir dir("paths");
  std::vector<std::filesystem::path> paths;
  std::vector<NamedImage> images;
  for (int i = 0; i < 2; ++i) {
    ImagePlane p = testing::NaturalishPlane(10 + i, 64, 64);
    for (double& v : p.samples) v = std::round(v);
    const auto path = dir / ("img" + std::to_string(i) + ".png");
    SaveLuma(p, path);
    paths.push_back(path);
    images.push_back({path.filename().string(), p});
  }
  const PatchBatch a = SamplePatches(paths, 16, 4, 30, 8);
  const PatchBatch b = SamplePatches(images, 16, 4, 30, 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.patches[i].clean == b.patches[i].clean);
}

}  // namespace
}  // namespace dualres
