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

#include "dualres/patches.h"

#include <random>

#include "dualres/errors.h"
#include "dualres/log.h"

namespace dualres {

std::vector<NamedImage> LoadCorpus(const std::filesystem::path& dir) {
  std::vector<NamedImage> out;
  for (const auto& path : ListImages(dir)) {
    out.push_back({path.filename().string(), LoadLuma(path)});
  }
  return out;
}

PatchBatch SamplePatches(std::span<const NamedImage> corpus, int patch_size,
                         int count, int qf, std::uint64_t seed) {
  if (patch_size <= 0 || patch_size % kBlock != 0) {
    throw ArgumentError("patch size must be a positive multiple of 8, got " +
                        std::to_string(patch_size));
  }
  if (count < 0) throw ArgumentError("patch count must be nonnegative");
  LuminanceTable(qf);  // validates qf

  std::vector<const NamedImage*> usable;
  for (const auto& image : corpus) {
    if (image.plane.width < patch_size || image.plane.height < patch_size) {
      LogWarn("skipping " + image.name + " (" + std::to_string(image.plane.width) +
              "x" + std::to_string(image.plane.height) + ") smaller than patch size " +
              std::to_string(patch_size));
      continue;
    }
    usable.push_back(&image);
  }
  if (usable.empty()) {
    throw ConfigError("no corpus image is at least " + std::to_string(patch_size) +
                      "x" + std::to_string(patch_size));
  }

  PatchBatch batch;
  batch.patch_size = patch_size;
  batch.seed = seed;
  batch.patches.reserve(count);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
  for (int i = 0; i < count; ++i) {
    const ImagePlane& src = usable[pick(rng)]->plane;
    std::uniform_int_distribution<int> dx(0, src.width - patch_size);
    std::uniform_int_distribution<int> dy(0, src.height - patch_size);
    const int x = dx(rng);
    const int y = dy(rng);
    Patch p;
    p.clean = Crop(src, x, y, patch_size, patch_size);
    Degraded d = Degrade(p.clean, qf);
    p.degraded = std::move(d.degraded);
    p.cdct = std::move(d.cdct);
    p.table = d.table;
    batch.patches.push_back(std::move(p));
  }
  return batch;
}

PatchBatch SamplePatches(std::span<const std::filesystem::path> corpus,
                         int patch_size, int count, int qf, std::uint64_t seed) {
  std::vector<NamedImage> images;
  images.reserve(corpus.size());
  for (const auto& path : corpus) {
    images.push_back({path.filename().string(), LoadLuma(path)});
  }
  return SamplePatches(images, patch_size, count, qf, seed);
}

}  // namespace dualres
