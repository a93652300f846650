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

#include "dualres/metrics.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>

#include "dualres/errors.h"
#include "dualres/jpeg.h"

namespace dualres {

namespace fs = std::filesystem;

namespace {

void RequireSameShape(const ImagePlane& a, const ImagePlane& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw ArgumentError(std::string(what) + ": shapes differ (" +
                        std::to_string(a.width) + "x" + std::to_string(a.height) +
                        " vs " + std::to_string(b.width) + "x" +
                        std::to_string(b.height) + ")");
  }
}

double Mse(const ImagePlane& a, const ImagePlane& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    s += d * d;
  }
  return s / static_cast<double>(a.samples.size());
}

double PsnrFromMse(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

constexpr int kWindow = 11;

const std::array<double, kWindow>& GaussianTaps() {
  static const auto taps = [] {
    std::array<double, kWindow> t{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double x = i - kWindow / 2;
      t[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
      sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

// Separable "valid" Gaussian filtering of w x h data.
std::vector<double> FilterValid(const std::vector<double>& in, int w, int h) {
  const auto& g = GaussianTaps();
  const int ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * in[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double Psnr(const ImagePlane& ref, const ImagePlane& test) {
  RequireSameShape(ref, test, "psnr");
  return PsnrFromMse(Mse(ref, test));
}

double Ssim(const ImagePlane& ref, const ImagePlane& test) {
  RequireSameShape(ref, test, "ssim");
  if (ref.width < kWindow || ref.height < kWindow) {
    throw ArgumentError("ssim needs images of at least 11x11, got " +
                        std::to_string(ref.width) + "x" + std::to_string(ref.height));
  }
  const int w = ref.width, h = ref.height;
  const std::size_t n = ref.samples.size();
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = ref.samples[i], b = test.samples[i];
    xx[i] = a * a;
    yy[i] = b * b;
    xy[i] = a * b;
  }
  const auto mx = FilterValid(ref.samples, w, h);
  const auto my = FilterValid(test.samples, w, h);
  const auto sxx = FilterValid(xx, w, h);
  const auto syy = FilterValid(yy, w, h);
  const auto sxy = FilterValid(xy, w, h);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double BlockingEffectFactor(const ImagePlane& im, int block) {
  if (block < 2) throw ArgumentError("block size must be at least 2");
  const int w = im.width, h = im.height;
  if (w < 2 || h < 2) return 0.0;
  double boundary = 0.0, interior = 0.0;
  // Horizontal neighbours (x, x + 1).
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      const double d = im.at(x, y) - im.at(x + 1, y);
      ((x % block == block - 1) ? boundary : interior) += d * d;
    }
  }
  // Vertical neighbours (y, y + 1).
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = im.at(x, y) - im.at(x, y + 1);
      ((y % block == block - 1) ? boundary : interior) += d * d;
    }
  }
  const double nb_h = static_cast<double>(h) * (w / block - 1);
  const double nb_v = static_cast<double>(w) * (h / block - 1);
  const double nn_h = static_cast<double>(h) * (w - 1) - nb_h;
  const double nn_v = static_cast<double>(w) * (h - 1) - nb_v;
  if (nb_h + nb_v <= 0.0 || nn_h + nn_v <= 0.0) return 0.0;
  const double db = boundary / (nb_h + nb_v);
  const double dn = interior / (nn_h + nn_v);
  if (db <= dn) return 0.0;
  const double eta = std::log2(block) / std::log2(std::min(w, h));
  return eta * (db - dn);
}

double PsnrB(const ImagePlane& ref, const ImagePlane& test, int block) {
  RequireSameShape(ref, test, "psnr_b");
  const double mse = Mse(ref, test);
  if (mse <= 0.0) return kPsnrCap;
  return PsnrFromMse(mse + BlockingEffectFactor(test, block));
}

ImageMetrics MeasureImage(std::string filename, const ImagePlane& ref,
                          const ImagePlane& test) {
  return {std::move(filename), Psnr(ref, test), Ssim(ref, test), PsnrB(ref, test)};
}

MetricReport Summarize(std::vector<ImageMetrics> images) {
  MetricReport r;
  r.images = std::move(images);
  if (r.images.empty()) return r;
  for (const auto& m : r.images) {
    r.mean_psnr += m.psnr;
    r.mean_ssim += m.ssim;
    r.mean_psnr_b += m.psnr_b;
  }
  const double n = static_cast<double>(r.images.size());
  r.mean_psnr /= n;
  r.mean_ssim /= n;
  r.mean_psnr_b /= n;
  return r;
}

namespace {

std::vector<fs::path> RequireImages(const fs::path& dir) {
  auto images = ListImages(dir);
  if (images.empty()) {
    throw IoError("no PNG or PGM images in '" + dir.string() + "'");
  }
  return images;
}

}  // namespace

MetricReport EvaluateDirectories(const fs::path& clean_dir, const fs::path& test_dir) {
  const auto clean = RequireImages(clean_dir);
  const auto tests = ListImages(test_dir);
  std::map<std::string, fs::path> by_name, by_stem;
  for (const auto& p : tests) {
    by_name.emplace(p.filename().string(), p);
    by_stem.emplace(p.stem().string(), p);
  }
  std::vector<ImageMetrics> rows;
  for (const auto& c : clean) {
    const fs::path* match = nullptr;
    if (auto it = by_name.find(c.filename().string()); it != by_name.end()) {
      match = &it->second;
    } else if (auto st = by_stem.find(c.stem().string()); st != by_stem.end()) {
      match = &st->second;
    }
    if (match == nullptr) {
      throw IoError("no test image pairs with '" + c.filename().string() + "' in '" +
                    test_dir.string() + "'");
    }
    rows.push_back(MeasureImage(c.filename().string(), LoadLuma(c), LoadLuma(*match)));
  }
  return Summarize(std::move(rows));
}

MetricReport EvaluateJpegBaseline(const fs::path& clean_dir, int qf) {
  LuminanceTable(qf);
  std::vector<ImageMetrics> rows;
  for (const auto& c : RequireImages(clean_dir)) {
    const ImagePlane clean = LoadLuma(c);
    rows.push_back(MeasureImage(c.filename().string(), clean, Degrade(clean, qf).degraded));
  }
  return Summarize(std::move(rows));
}

MetricReport EvaluateModel(const fs::path& clean_dir, const Model<float>& model, int qf) {
  LuminanceTable(qf);
  std::vector<ImageMetrics> rows;
  for (const auto& c : RequireImages(clean_dir)) {
    const ImagePlane clean = LoadLuma(c);
    const Degraded d = Degrade(clean, qf);
    rows.push_back(MeasureImage(c.filename().string(), clean,
                                Restore(model, d.degraded, d.cdct, d.table)));
  }
  return Summarize(std::move(rows));
}

std::string FormatReportTable(const MetricReport& report, std::string_view title) {
  std::size_t name_w = 8;
  for (const auto& m : report.images) name_w = std::max(name_w, m.filename.size());
  std::string out(title);
  out += '\n';
  char line[512];
  std::snprintf(line, sizeof line, "%-*s %10s %8s %11s\n", static_cast<int>(name_w),
                "image", "PSNR(dB)", "SSIM", "PSNR-B(dB)");
  out += line;
  for (const auto& m : report.images) {
    std::snprintf(line, sizeof line, "%-*s %10.2f %8.4f %11.2f\n",
                  static_cast<int>(name_w), m.filename.c_str(), m.psnr, m.ssim, m.psnr_b);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-*s %10.2f %8.4f %11.2f\n", static_cast<int>(name_w),
                "mean", report.mean_psnr, report.mean_ssim, report.mean_psnr_b);
  out += line;
  return out;
}

std::string FormatReportCsv(const MetricReport& report) {
  std::string out = "filename,psnr,ssim,psnr_b\n";
  char line[512];
  for (const auto& m : report.images) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f\n", m.filename.c_str(), m.psnr,
                  m.ssim, m.psnr_b);
    out += line;
  }
  std::snprintf(line, sizeof line, "mean,%.6f,%.6f,%.6f\n", report.mean_psnr,
                report.mean_ssim, report.mean_psnr_b);
  out += line;
  return out;
}

}  // namespace dualres
