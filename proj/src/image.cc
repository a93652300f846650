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

#include "dualres/image.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>

#include "dualres/errors.h"
#include "dualres/fileutil.h"

namespace dualres {

namespace fs = std::filesystem;

ImagePlane::ImagePlane(int w, int h, double fill)
    : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw ArgumentError("negative image dimensions");
}

namespace {

std::vector<unsigned char> ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open image '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Binary PGM. Header tokens are separated by whitespace; '#' starts a comment
// running to end of line. Exactly one whitespace byte precedes the raster.
ImagePlane DecodePgm(const std::vector<unsigned char>& bytes,
                     const fs::path& path) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::size_t start = pos;
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 30)) break;
      ++pos;
    }
    if (pos == start) {
      throw DecodeError("malformed PGM header in '" + path.string() + "'");
    }
    return value;
  };
  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) {
    throw DecodeError("bad PGM dimensions in '" + path.string() + "'");
  }
  if (maxval <= 0 || maxval > 255) {
    throw DecodeError("unsupported PGM maxval " + std::to_string(maxval) +
                      " in '" + path.string() + "' (8-bit only)");
  }
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) {
    throw DecodeError("truncated PGM raster in '" + path.string() + "'");
  }
  ImagePlane plane(static_cast<int>(w), static_cast<int>(h));
  const double scale = 255.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    plane.samples[i] = std::min(255.0, bytes[pos + i] * scale);
  }
  return plane;
}

ImagePlane DecodePng(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  const std::string name = path.string();
  if (!png_image_begin_read_from_file(&image, name.c_str())) {
    throw DecodeError("cannot decode PNG '" + name + "': " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw DecodeError("unsupported 16-bit PNG '" + name + "'");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  // Request an alpha channel so libpng never composites; alpha is dropped.
  image.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  const int channels = color ? 4 : 2;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("cannot decode PNG '" + name + "': " + msg);
  }
  ImagePlane plane(static_cast<int>(image.width),
                   static_cast<int>(image.height));
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const png_byte* px = &buffer[i * channels];
    double y = color ? kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2]
                     : static_cast<double>(px[0]);
    plane.samples[i] = std::clamp(y, 0.0, 255.0);
  }
  return plane;
}

}  // namespace

ImagePlane LoadLuma(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw DecodeError("cannot read image '" + path.string() + "'");
  }
  std::vector<unsigned char> head;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot open image '" + path.string() + "'");
    head.resize(8);
    in.read(reinterpret_cast<char*>(head.data()), 8);
    head.resize(static_cast<std::size_t>(in.gcount()));
  }
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P',  'N',  'G',
                                                 '\r', '\n', 0x1a, '\n'};
  if (head.size() == 8 && std::memcmp(head.data(), kPngMagic, 8) == 0) {
    return DecodePng(path);
  }
  if (head.size() >= 2 && head[0] == 'P' && head[1] == '5') {
    return DecodePgm(ReadAll(path), path);
  }
  throw DecodeError("unsupported image format '" + path.string() +
                    "' (expected PNG or binary PGM)");
}

void SaveLuma(const ImagePlane& plane, const fs::path& path) {
  if (plane.empty() || plane.size() != static_cast<std::size_t>(plane.width) *
                                           plane.height) {
    throw ArgumentError("cannot save an empty or inconsistent plane");
  }
  std::vector<png_byte> bytes(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    // std::round is half away from zero.
    bytes[i] = static_cast<png_byte>(
        std::clamp(std::round(plane.samples[i]), 0.0, 255.0));
  }
  AtomicWrite(path, [&](const fs::path& tmp) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(plane.width);
    image.height = static_cast<png_uint_32>(plane.height);
    image.format = PNG_FORMAT_GRAY;
    const std::string name = tmp.string();
    if (!png_image_write_to_file(&image, name.c_str(), 0, bytes.data(), 0,
                                 nullptr)) {
      std::string msg = image.message;
      png_image_free(&image);
      throw IoError("cannot write PNG '" + path.string() + "': " + msg);
    }
  });
}

PaddedPlane PadToBlockMultiple(const ImagePlane& plane) {
  if (plane.empty()) throw ArgumentError("cannot pad an empty plane");
  const int w = (plane.width + 7) / 8 * 8;
  const int h = (plane.height + 7) / 8 * 8;
  PaddedPlane out{ImagePlane(w, h), plane.width, plane.height};
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, plane.height - 1);
    for (int x = 0; x < w; ++x) {
      out.plane.at(x, y) = plane.at(std::min(x, plane.width - 1), sy);
    }
  }
  return out;
}

ImagePlane Crop(const ImagePlane& plane, int x0, int y0, int width,
                int height) {
  if (x0 < 0 || y0 < 0 || width < 0 || height < 0 ||
      x0 + width > plane.width || y0 + height > plane.height) {
    throw ArgumentError("crop window outside plane");
  }
  ImagePlane out(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(&plane.samples[static_cast<std::size_t>(y0 + y) * plane.width +
                               x0],
                width, &out.samples[static_cast<std::size_t>(y) * width]);
  }
  return out;
}

void ClampInPlace(ImagePlane& plane, double lo, double hi) {
  for (double& v : plane.samples) v = std::clamp(v, lo, hi);
}

bool IsSupportedImagePath(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm";
}

std::vector<fs::path> ListImages(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("not a directory: '" + dir.string() + "'");
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && IsSupportedImagePath(entry.path())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

}  // namespace dualres
