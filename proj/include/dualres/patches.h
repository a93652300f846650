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

// Deterministic training-pair sampling. A patch is cropped from a clean
// image at a uniformly random pixel offset and degraded afterwards, so its
// block grid starts at the patch's own top-left corner.

#ifndef DUALRES_PATCHES_H_
#define DUALRES_PATCHES_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dualres/image.h"
#include "dualres/jpeg.h"

namespace dualres {

struct Patch {
  ImagePlane clean;
  ImagePlane degraded;
  CoeffGrid cdct;
  QuantTable table;
};

struct PatchBatch {
  std::vector<Patch> patches;
  int patch_size = 0;
  std::uint64_t seed = 0;
};

struct NamedImage {
  std::string name;
  ImagePlane plane;
};

// Loads every supported image in dir, sorted by filename.
std::vector<NamedImage> LoadCorpus(const std::filesystem::path& dir);

// Images smaller than patch_size in either dimension are skipped with a
// warning. Throws ArgumentError for a patch size that is not a positive
// multiple of 8 and ConfigError if no image is large enough.
PatchBatch SamplePatches(std::span<const NamedImage> corpus, int patch_size,
                         int count, int qf, std::uint64_t seed);
PatchBatch SamplePatches(std::span<const std::filesystem::path> corpus,
                         int patch_size, int count, int qf, std::uint64_t seed);

}  // namespace dualres

#endif  // DUALRES_PATCHES_H_
