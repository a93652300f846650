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

#ifndef DUALRES_RECEPTIVE_FIELD_H_
#define DUALRES_RECEPTIVE_FIELD_H_

#include <span>
#include <string>
#include <vector>

#include "dualres/tensor.h"

namespace dualres {

enum class LayerKind { kConv, kTransposedConv, kElementwise };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int dilation = 1;
  int padding = 0;

  static LayerSpec Conv(int k, int dilation = 1, int stride = 1) {
    return {LayerKind::kConv, k, k, stride, dilation, dilation * (k - 1) / 2};
  }
  static LayerSpec TransposedConv(int k, int stride, int padding) {
    return {LayerKind::kTransposedConv, k, k, stride, 1, padding};
  }
};

void ValidateLayerSpec(const LayerSpec& spec);

struct ReceptiveField {
  int height = 0;
  int width = 0;
  bool operator==(const ReceptiveField&) const = default;
};

// Exact span on an unbounded signal: an output interval is pulled back through
// each layer (a convolution maps [lo, hi] to [s lo - p, s hi - p + d(k - 1)],
// a transposed one to the inputs i with s i - p + t in range, 0 <= t < k).
// The result is the worst case over output positions. Without upsampling it
// equals the familiar recurrence r += (k - 1) d j, j *= s.
ReceptiveField AnalyticReceptiveField(std::span<const LayerSpec> layers);

// Product of the transposed-convolution strides; spans repeat with this
// period in the output position.
int UpsamplingPeriod(std::span<const LayerSpec> layers);

// Bounding box of the nonzero entries of an input gradient (N, C, H, W),
// union over batch and channels. Zero-size if the gradient is all zero.
struct Footprint {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};
template <typename T>
Footprint NonzeroFootprint(const Tensor<T>& input, std::span<const T> grad);

// Impulse oracle for a plain layer chain: builds single-channel layers with
// positive random weights, backpropagates a one-hot gradient at output pixels
// near the centre (one per phase of the upsampling period) and reports the
// largest input footprint.
ReceptiveField MeasureChainReceptiveField(std::span<const LayerSpec> layers,
                                          unsigned seed = 7);

std::string DescribeLayer(const LayerSpec& spec);

}  // namespace dualres

#endif  // DUALRES_RECEPTIVE_FIELD_H_
