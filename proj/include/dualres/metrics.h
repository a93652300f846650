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

// Full-reference quality metrics on luma planes in [0, 255] and dataset
// aggregation. No border is shaved.

#ifndef DUALRES_METRICS_H_
#define DUALRES_METRICS_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dualres/image.h"
#include "dualres/network.h"

namespace dualres {

// Reported for identical images instead of +inf.
inline constexpr double kPsnrCap = 100.0;

double Psnr(const ImagePlane& ref, const ImagePlane& test);

// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, L = 255. Both dimensions must be at least 11.
double Ssim(const ImagePlane& ref, const ImagePlane& test);

// Blocking effect factor of an image: mean squared difference across block
// boundaries minus that across non-boundaries, scaled by
// log2(block) / log2(min(H, W)) and floored at 0.
double BlockingEffectFactor(const ImagePlane& image, int block = 8);

// 10 log10(255^2 / (MSE + BEF(test))).
double PsnrB(const ImagePlane& ref, const ImagePlane& test, int block = 8);

struct ImageMetrics {
  std::string filename;
  double psnr = 0.0;
  double ssim = 0.0;
  double psnr_b = 0.0;
};

ImageMetrics MeasureImage(std::string filename, const ImagePlane& ref,
                          const ImagePlane& test);

struct MetricReport {
  std::vector<ImageMetrics> images;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_psnr_b = 0.0;

  std::size_t count() const { return images.size(); }
};

MetricReport Summarize(std::vector<ImageMetrics> images);

// Pairs each clean image with the test image of the same filename, or
// failing that the same stem. A missing pair throws IoError naming the file.
MetricReport EvaluateDirectories(const std::filesystem::path& clean_dir,
                                 const std::filesystem::path& test_dir);
// Degrades every clean image at qf and scores the decoded result.
MetricReport EvaluateJpegBaseline(const std::filesystem::path& clean_dir,
                                  int qf);
// Degrades at qf, restores with model and scores the restoration.
MetricReport EvaluateModel(const std::filesystem::path& clean_dir,
                           const Model<float>& model, int qf);

// Aligned table with one row per image and a mean row.
std::string FormatReportTable(const MetricReport& report,
                              std::string_view title);
// "filename,psnr,ssim,psnr_b" header plus one line per image and a final
// "mean" line.
std::string FormatReportCsv(const MetricReport& report);

}  // namespace dualres

#endif  // DUALRES_METRICS_H_
