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

#include "dualres/jpeg.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "dualres/errors.h"
#include "dualres/fileutil.h"

namespace dualres {

namespace fs = std::filesystem;

const QuantTable kBaseLuminanceTable = {{
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,   //
}};

QuantTable LuminanceTable(int qf) {
  if (qf < 1 || qf > 100) {
    throw ArgumentError("quality factor must be in 1..100, got " +
                        std::to_string(qf));
  }
  const long scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QuantTable t;
  for (int i = 0; i < kBlockArea; ++i) {
    long step = (kBaseLuminanceTable.steps[i] * scale + 50) / 100;
    t.steps[i] = static_cast<int>(std::clamp(step, 1L, 255L));
  }
  return t;
}

const std::array<std::array<double, kBlock>, kBlock>& DctMatrix() {
  static const auto kMatrix = [] {
    std::array<std::array<double, kBlock>, kBlock> m{};
    for (int u = 0; u < kBlock; ++u) {
      const double c = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int x = 0; x < kBlock; ++x) {
        m[u][x] = c * std::cos((2 * x + 1) * u * std::numbers::pi / (2 * kBlock));
      }
    }
    return m;
  }();
  return kMatrix;
}

namespace {

// out = A * in * A^T for 8x8 row-major blocks.
void ForwardBlock(const double* in, double* out) {
  const auto& a = DctMatrix();
  double tmp[kBlockArea];
  for (int u = 0; u < kBlock; ++u) {
    for (int x = 0; x < kBlock; ++x) {
      double s = 0.0;
      for (int y = 0; y < kBlock; ++y) s += a[u][y] * in[y * kBlock + x];
      tmp[u * kBlock + x] = s;
    }
  }
  for (int u = 0; u < kBlock; ++u) {
    for (int v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (int x = 0; x < kBlock; ++x) s += tmp[u * kBlock + x] * a[v][x];
      out[u * kBlock + v] = s;
    }
  }
}

// out = A^T * in * A.
void InverseBlock(const double* in, double* out) {
  const auto& a = DctMatrix();
  double tmp[kBlockArea];
  for (int y = 0; y < kBlock; ++y) {
    for (int v = 0; v < kBlock; ++v) {
      double s = 0.0;
      for (int u = 0; u < kBlock; ++u) s += a[u][y] * in[u * kBlock + v];
      tmp[y * kBlock + v] = s;
    }
  }
  for (int y = 0; y < kBlock; ++y) {
    for (int x = 0; x < kBlock; ++x) {
      double s = 0.0;
      for (int v = 0; v < kBlock; ++v) s += tmp[y * kBlock + v] * a[v][x];
      out[y * kBlock + x] = s;
    }
  }
}

void CheckGridStorage(const CoeffGrid& grid) {
  if (grid.coeffs.size() !=
      static_cast<std::size_t>(grid.blocks_h) * grid.blocks_w * kBlockArea) {
    throw ArgumentError("coefficient grid storage does not match its shape");
  }
}

}  // namespace

CoeffGrid BlockDct(const ImagePlane& plane) {
  if (plane.width % kBlock != 0 || plane.height % kBlock != 0) {
    throw ArgumentError("block DCT needs dimensions that are multiples of 8, got " +
                        std::to_string(plane.width) + "x" +
                        std::to_string(plane.height));
  }
  CoeffGrid grid(plane.height / kBlock, plane.width / kBlock);
  double block[kBlockArea];
  for (int by = 0; by < grid.blocks_h; ++by) {
    for (int bx = 0; bx < grid.blocks_w; ++bx) {
      for (int y = 0; y < kBlock; ++y) {
        for (int x = 0; x < kBlock; ++x) {
          block[y * kBlock + x] =
              plane.at(bx * kBlock + x, by * kBlock + y) - 128.0;
        }
      }
      ForwardBlock(block, grid.block(by, bx));
    }
  }
  return grid;
}

ImagePlane BlockIdct(const CoeffGrid& grid) {
  CheckGridStorage(grid);
  ImagePlane plane(grid.blocks_w * kBlock, grid.blocks_h * kBlock);
  double block[kBlockArea];
  for (int by = 0; by < grid.blocks_h; ++by) {
    for (int bx = 0; bx < grid.blocks_w; ++bx) {
      InverseBlock(grid.block(by, bx), block);
      for (int y = 0; y < kBlock; ++y) {
        for (int x = 0; x < kBlock; ++x) {
          plane.at(bx * kBlock + x, by * kBlock + y) =
              block[y * kBlock + x] + 128.0;
        }
      }
    }
  }
  return plane;
}

CoeffGrid Quantize(const CoeffGrid& grid, const QuantTable& table) {
  CheckGridStorage(grid);
  CoeffGrid out = grid;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
    const double q = table.steps[i % kBlockArea];
    out.coeffs[i] = std::round(grid.coeffs[i] / q) * q;
  }
  return out;
}

CoeffGrid Requantize(const ImagePlane& decoded, const QuantTable& table) {
  return Quantize(BlockDct(PadToBlockMultiple(decoded).plane), table);
}

Degraded Degrade(const ImagePlane& plane, int qf) {
  Degraded out;
  out.table = LuminanceTable(qf);
  PaddedPlane padded = PadToBlockMultiple(plane);
  out.cdct = Quantize(BlockDct(padded.plane), out.table);
  ImagePlane decoded = BlockIdct(out.cdct);
  ClampInPlace(decoded);
  out.degraded =
      Crop(decoded, 0, 0, padded.original_width, padded.original_height);
  return out;
}

FeasibleBox FeasibleInterval(const CoeffGrid& cdct, const QuantTable& table) {
  CheckGridStorage(cdct);
  FeasibleBox box{cdct, cdct};
  for (std::size_t i = 0; i < cdct.coeffs.size(); ++i) {
    const double half = 0.5 * table.steps[i % kBlockArea];
    box.lo.coeffs[i] = cdct.coeffs[i] - half;
    box.hi.coeffs[i] = cdct.coeffs[i] + half;
  }
  return box;
}

CoeffGrid DruProject(const CoeffGrid& x, const CoeffGrid& cdct,
                     const QuantTable& table) {
  if (!x.SameShape(cdct)) {
    throw ArgumentError("DRU input and quantized grid differ in shape");
  }
  CheckGridStorage(x);
  CheckGridStorage(cdct);
  CoeffGrid out = x;
  for (std::size_t i = 0; i < x.coeffs.size(); ++i) {
    const double half = 0.5 * table.steps[i % kBlockArea];
    const double lo = cdct.coeffs[i] - half;
    const double hi = cdct.coeffs[i] + half;
    if (x.coeffs[i] < lo) {
      out.coeffs[i] = lo;
    } else if (x.coeffs[i] > hi) {
      out.coeffs[i] = hi;
    }
  }
  return out;
}

QuantTable ParseQuantTable(const std::string& text) {
  std::istringstream in(text);
  QuantTable t;
  for (int i = 0; i < kBlockArea; ++i) {
    if (!(in >> t.steps[i])) {
      throw ArgumentError("quantization table needs 64 integers, found " +
                          std::to_string(i));
    }
    if (t.steps[i] < 1 || t.steps[i] > 255) {
      throw ArgumentError("quantization step out of [1, 255]: " +
                          std::to_string(t.steps[i]));
    }
  }
  std::string extra;
  if (in >> extra) throw ArgumentError("trailing data after quantization table");
  return t;
}

std::string FormatQuantTable(const QuantTable& table) {
  std::string s;
  for (int u = 0; u < kBlock; ++u) {
    for (int v = 0; v < kBlock; ++v) {
      if (v) s += ' ';
      s += std::to_string(table.at(u, v));
    }
    s += '\n';
  }
  return s;
}

QuantTable ReadQuantTable(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read quantization table '" + path.string() + "'");
  std::string text{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};
  return ParseQuantTable(text);
}

void WriteQuantTable(const QuantTable& table, const fs::path& path) {
  WriteFileAtomically(path, FormatQuantTable(table));
}

namespace {

template <typename T>
void AppendLittleEndian(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "dump writers assume a little-endian host");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace

void WriteCoeffGrid(const CoeffGrid& grid, const fs::path& path) {
  CheckGridStorage(grid);
  std::string out;
  out.reserve(8 + grid.coeffs.size() * 8);
  AppendLittleEndian(out, static_cast<std::uint32_t>(grid.blocks_h));
  AppendLittleEndian(out, static_cast<std::uint32_t>(grid.blocks_w));
  for (double c : grid.coeffs) AppendLittleEndian(out, c);
  WriteFileAtomically(path, out);
}

CoeffGrid ReadCoeffGrid(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read coefficient dump '" + path.string() + "'");
  std::string bytes{std::istreambuf_iterator<char>(in),
                    std::istreambuf_iterator<char>()};
  if (bytes.size() < 8) {
    throw IoError("coefficient dump '" + path.string() + "' lacks its header");
  }
  std::uint32_t bh = 0, bw = 0;
  std::memcpy(&bh, bytes.data(), 4);
  std::memcpy(&bw, bytes.data() + 4, 4);
  const std::size_t n = static_cast<std::size_t>(bh) * bw * kBlockArea;
  if (bh == 0 || bw == 0 || bh > 65536 || bw > 65536 ||
      bytes.size() != 8 + n * sizeof(double)) {
    throw IoError("coefficient dump '" + path.string() +
                  "' has a size inconsistent with its header");
  }
  CoeffGrid grid(static_cast<int>(bh), static_cast<int>(bw));
  std::memcpy(grid.coeffs.data(), bytes.data() + 8, n * sizeof(double));
  for (double c : grid.coeffs) {
    if (!std::isfinite(c)) {
      throw IoError("coefficient dump '" + path.string() +
                    "' contains non-finite values");
    }
  }
  return grid;
}

}  // namespace dualres
