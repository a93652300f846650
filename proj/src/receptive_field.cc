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

#include "dualres/receptive_field.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "dualres/ops.h"

namespace dualres {

void ValidateLayerSpec(const LayerSpec& spec) {
  if (spec.kernel_h < 1 || spec.kernel_w < 1 || spec.stride < 1 ||
      spec.dilation < 1 || spec.padding < 0) {
    throw ArgumentError("invalid layer spec " + DescribeLayer(spec));
  }
  if (spec.kind == LayerKind::kTransposedConv && spec.dilation != 1) {
    throw ArgumentError("transposed convolutions support dilation 1 only");
  }
}

namespace {

std::int64_t FloorDiv(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

// Input span of output position o along one axis.
std::int64_t Span(std::span<const LayerSpec> layers, std::int64_t o, bool vertical) {
  std::int64_t lo = o, hi = o;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    const std::int64_t k = vertical ? it->kernel_h : it->kernel_w;
    const std::int64_t s = it->stride, d = it->dilation, p = it->padding;
    switch (it->kind) {
      case LayerKind::kConv:
        lo = s * lo - p;
        hi = s * hi - p + d * (k - 1);
        break;
      case LayerKind::kTransposedConv:
        // o = s i - p + t with 0 <= t < k.
        lo = -FloorDiv(-(lo + p - k + 1), s);
        hi = FloorDiv(hi + p, s);
        break;
      case LayerKind::kElementwise:
        break;
    }
  }
  return hi - lo + 1;
}

int WorstSpan(std::span<const LayerSpec> layers, bool vertical) {
  const std::int64_t period = UpsamplingPeriod(layers);
  std::int64_t worst = 1;
  for (std::int64_t o = 0; o < period; ++o) {
    worst = std::max(worst, Span(layers, o, vertical));
  }
  return static_cast<int>(worst);
}

}  // namespace

int UpsamplingPeriod(std::span<const LayerSpec> layers) {
  int period = 1;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::kTransposedConv) period *= l.stride;
  }
  return period;
}

ReceptiveField AnalyticReceptiveField(std::span<const LayerSpec> layers) {
  for (const LayerSpec& s : layers) ValidateLayerSpec(s);
  return {WorstSpan(layers, true), WorstSpan(layers, false)};
}

template <typename T>
Footprint NonzeroFootprint(const Tensor<T>& input, std::span<const T> grad) {
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2),
            w = input.dim(3);
  int top = h, bottom = -1, left = w, right = -1;
  if (!grad.empty()) {
    for (int p = 0; p < n * c; ++p) {
      const T* g = grad.data() + static_cast<std::size_t>(p) * h * w;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (g[y * w + x] != T(0)) {
            top = std::min(top, y);
            bottom = std::max(bottom, y);
            left = std::min(left, x);
            right = std::max(right, x);
          }
        }
      }
    }
  }
  if (bottom < 0) return {};
  return {top, left, bottom - top + 1, right - left + 1};
}

template Footprint NonzeroFootprint(const Tensor<float>&, std::span<const float>);
template Footprint NonzeroFootprint(const Tensor<double>&, std::span<const double>);

ReceptiveField MeasureChainReceptiveField(std::span<const LayerSpec> layers,
                                          unsigned seed) {
  const ReceptiveField expect = AnalyticReceptiveField(layers);
  int total_stride = 1;
  for (const LayerSpec& s : layers) {
    if (s.kind == LayerKind::kConv) total_stride *= s.stride;
  }
  // Room for the footprint on every side of the probe, aligned to the strides.
  int side = 2 * std::max(expect.height, expect.width) + 16;
  side = (side + total_stride - 1) / total_stride * total_stride;

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  std::vector<Tensor<double>> kernels;
  for (const LayerSpec& s : layers) {
    std::vector<double> k(static_cast<std::size_t>(s.kernel_h) * s.kernel_w);
    for (double& v : k) v = weight(rng);
    kernels.emplace_back(Shape{1, 1, s.kernel_h, s.kernel_w}, std::move(k));
  }
  ReceptiveField worst;
  for (int phase = 0; phase < UpsamplingPeriod(layers); ++phase) {
    Tape<double> tape;
    Tensor<double> input = Tensor<double>::Full({1, 1, side, side}, 1.0, true);
    Tensor<double> x = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& s = layers[i];
      if (s.kind == LayerKind::kConv) {
        x = Conv2d(&tape, x, kernels[i], Tensor<double>(),
                   ConvGeometry{s.stride, s.dilation, s.padding});
      } else if (s.kind == LayerKind::kTransposedConv) {
        x = Conv2dTranspose(&tape, x, kernels[i], Tensor<double>(), s.stride,
                            s.padding);
      }
    }
    std::vector<double> probe(x.numel(), 0.0);
    const int oh = x.dim(2), ow = x.dim(3);
    probe[static_cast<std::size_t>(oh / 2 + phase) * ow + ow / 2 + phase] = 1.0;
    Tensor<double> loss =
        WeightedSum(&tape, x, Tensor<double>(x.shape(), std::move(probe)));
    Gradients<double> grads = tape.Backward(loss);
    const Footprint fp = NonzeroFootprint(input, grads.View(input));
    worst.height = std::max(worst.height, fp.height);
    worst.width = std::max(worst.width, fp.width);
  }
  return worst;
}

std::string DescribeLayer(const LayerSpec& spec) {
  std::string kind = spec.kind == LayerKind::kConv             ? "conv"
                     : spec.kind == LayerKind::kTransposedConv ? "tconv"
                                                               : "elementwise";
  return kind + " " + std::to_string(spec.kernel_h) + "x" +
         std::to_string(spec.kernel_w) + " s" + std::to_string(spec.stride) +
         " d" + std::to_string(spec.dilation) + " p" +
         std::to_string(spec.padding);
}

}  // namespace dualres
