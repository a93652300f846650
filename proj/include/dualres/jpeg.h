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

// Baseline-JPEG luma degradation done in memory: block DCT, quality-scaled
// quantization and the inverse path, plus the quantization-box projection
// applied to restored coefficients. No entropy coding is performed since it
// is lossless and adds no artifacts.

#ifndef DUALRES_JPEG_H_
#define DUALRES_JPEG_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dualres/image.h"

namespace dualres {

inline constexpr int kBlock = 8;
inline constexpr int kBlockArea = 64;

// 8x8 quantization steps; steps[8 * u + v] with u the vertical and v the
// horizontal frequency.
struct QuantTable {
  std::array<int, kBlockArea> steps{};

  int at(int u, int v) const { return steps[u * kBlock + v]; }
  bool operator==(const QuantTable&) const = default;
};

// Per-block DCT coefficients as a 64-channel grid at 1/8 resolution.
// coeffs[((by * blocks_w) + bx) * 64 + c], channel c = 8u + v.
struct CoeffGrid {
  int blocks_h = 0;
  int blocks_w = 0;
  std::vector<double> coeffs;

  CoeffGrid() = default;
  CoeffGrid(int bh, int bw, double fill = 0.0)
      : blocks_h(bh),
        blocks_w(bw),
        coeffs(static_cast<std::size_t>(bh) * bw * kBlockArea, fill) {}

  double* block(int by, int bx) {
    return &coeffs[(static_cast<std::size_t>(by) * blocks_w + bx) * kBlockArea];
  }
  const double* block(int by, int bx) const {
    return &coeffs[(static_cast<std::size_t>(by) * blocks_w + bx) * kBlockArea];
  }
  std::size_t size() const { return coeffs.size(); }
  bool SameShape(const CoeffGrid& o) const {
    return blocks_h == o.blocks_h && blocks_w == o.blocks_w;
  }
  bool operator==(const CoeffGrid&) const = default;
};

// IJG base luminance table (DC step 16) in natural order.
extern const QuantTable kBaseLuminanceTable;

// IJG quality scaling: s = 5000/qf below 50, 200 - 2 qf otherwise; entries
// floor((base * s + 50) / 100) clamped to [1, 255].
QuantTable LuminanceTable(int qf);

// Orthonormal 8x8 DCT-II basis, kDctMatrix[u][x].
const std::array<std::array<double, kBlock>, kBlock>& DctMatrix();

// Level shift by -128 then orthonormal 2D DCT-II per block. Dimensions must
// be multiples of 8.
CoeffGrid BlockDct(const ImagePlane& plane);

// Exact inverse of BlockDct including the +128 shift. Not clamped.
ImagePlane BlockIdct(const CoeffGrid& grid);

// round(O / Q) * Q with round half away from zero, table broadcast by channel.
CoeffGrid Quantize(const CoeffGrid& grid, const QuantTable& table);

struct Degraded {
  ImagePlane degraded;  // cropped to the input size, clamped to [0, 255]
  CoeffGrid cdct;       // quantized coefficients of the padded plane
  QuantTable table;
};

// pad -> dct -> quantize -> idct -> clamp -> crop.
Degraded Degrade(const ImagePlane& plane, int qf);

// Quantized coefficients of an image that is assumed to be a decode at qf:
// pad -> dct -> quantize. Exact for planes produced by Degrade whenever the
// rounding/clamping perturbation stays inside every half step.
CoeffGrid Requantize(const ImagePlane& decoded, const QuantTable& table);

struct FeasibleBox {
  CoeffGrid lo;
  CoeffGrid hi;
};

// [C - Q/2, C + Q/2] elementwise.
FeasibleBox FeasibleInterval(const CoeffGrid& cdct, const QuantTable& table);

// Elementwise clamp of x into the feasible box of cdct; no leaky slope.
CoeffGrid DruProject(const CoeffGrid& x, const CoeffGrid& cdct,
                     const QuantTable& table);

// Plain-text table: 8 rows of 8 whitespace-separated integers.
QuantTable ParseQuantTable(const std::string& text);
std::string FormatQuantTable(const QuantTable& table);
QuantTable ReadQuantTable(const std::filesystem::path& path);
void WriteQuantTable(const QuantTable& table, const std::filesystem::path& path);

// Coefficient dump: uint32 blocks_h, uint32 blocks_w (little endian, the
// 8-byte header), then blocks_h * blocks_w * 64 little-endian float64.
void WriteCoeffGrid(const CoeffGrid& grid, const std::filesystem::path& path);
CoeffGrid ReadCoeffGrid(const std::filesystem::path& path);

}  // namespace dualres

#endif  // DUALRES_JPEG_H_
