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

#ifndef DUALRES_IMAGE_H_
#define DUALRES_IMAGE_H_

#include <cstddef>
#include <filesystem>
#include <vector>

namespace dualres {

// Single-channel luma raster. Samples are row-major float64 in [0, 255]
// whenever they come out of a decode or clamp.
struct ImagePlane {
  int width = 0;
  int height = 0;
  std::vector<double> samples;

  ImagePlane() = default;
  ImagePlane(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return samples[Index(x, y)]; }
  double at(int x, int y) const { return samples[Index(x, y)]; }
  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }

  bool operator==(const ImagePlane&) const = default;

 private:
  std::size_t Index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

struct PaddedPlane {
  ImagePlane plane;
  int original_width = 0;
  int original_height = 0;
};

// Full-range BT.601 luma weights, as used by JFIF.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

// Reads an 8-bit PNG (gray or RGB, alpha ignored) or a binary PGM (P5).
// Throws DecodeError naming the path.
ImagePlane LoadLuma(const std::filesystem::path& path);

// Writes an 8-bit grayscale PNG. Samples are rounded half away from zero and
// clamped to [0, 255]. The file is written to a sibling temporary and renamed
// into place, so a failed call leaves no partial output.
void SaveLuma(const ImagePlane& plane, const std::filesystem::path& path);

// Grows both dimensions to the next multiple of 8 by edge replication.
PaddedPlane PadToBlockMultiple(const ImagePlane& plane);

// Top-left width x height window.
ImagePlane Crop(const ImagePlane& plane, int x0, int y0, int width, int height);

void ClampInPlace(ImagePlane& plane, double lo = 0.0, double hi = 255.0);

// True for files LoadLuma understands, judged by extension.
bool IsSupportedImagePath(const std::filesystem::path& path);

// Supported images directly inside dir, sorted by filename.
std::vector<std::filesystem::path> ListImages(const std::filesystem::path& dir);

}  // namespace dualres

#endif  // DUALRES_IMAGE_H_
