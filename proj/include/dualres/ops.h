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

// Differentiable operators. Image tensors are NCHW. Every operator checks its
// output for NaN/Inf and throws NumericFault naming itself.

#ifndef DUALRES_OPS_H_
#define DUALRES_OPS_H_

#include "dualres/tensor.h"

namespace dualres {

struct ConvGeometry {
  int stride = 1;
  int dilation = 1;
  int padding = 0;
};

// Spatial output size of a convolution, floor((in + 2p - d(k-1) - 1)/s) + 1.
int ConvOutputSize(int in, int kernel, const ConvGeometry& g);
// (in - 1) s - 2p + k.
int ConvTransposeOutputSize(int in, int kernel, int stride, int padding);

// Dilated 2D cross-correlation: y[o](p) = b[o] + sum_{c,t} x[c](s p - pad + d t)
// w[o,c](t). The kernel is not flipped (deep-learning orientation); a true
// convolution is the same operator with a flipped kernel.
// x: (N, Cin, H, W); w: (Cout, Cin, kh, kw); bias: (Cout) or undefined.
template <typename T>
Tensor<T> Conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& bias, const ConvGeometry& g);

// Adjoint of Conv2d with respect to its input (dilation 1).
// x: (N, Cin, H, W); w: (Cin, Cout, kh, kw); bias: (Cout) or undefined.
template <typename T>
Tensor<T> Conv2dTranspose(Tape<T>* tape, const Tensor<T>& x,
                          const Tensor<T>& w, const Tensor<T>& bias, int stride,
                          int padding);

// Backward-data of Conv2d: the input gradient produced by an output gradient
// dy. Exposed so the transposed operator can be checked against it.
template <typename T>
Tensor<T> Conv2dBackwardData(const Tensor<T>& dy, const Tensor<T>& w,
                             const ConvGeometry& g, int in_h, int in_w);

// x if x >= 0 else slope[c] * x. slope: (C).
template <typename T>
Tensor<T> PRelu(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& slope);

template <typename T>
Tensor<T> Add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// a * s where s is a one-element tensor; differentiable in both.
template <typename T>
Tensor<T> Scale(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& s);

// mul * a + add with constant coefficients.
template <typename T>
Tensor<T> Affine(Tape<T>* tape, const Tensor<T>& a, double mul, double add);

// Stacks along dim 1; N, H, W must agree.
template <typename T>
Tensor<T> ConcatChannels(Tape<T>* tape, const Tensor<T>& a,
                         const Tensor<T>& b);

// mean((a - b)^2) as a rank-0 tensor.
template <typename T>
Tensor<T> Mse(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// sum(a * weights) with constant weights; rank-0 result.
template <typename T>
Tensor<T> WeightedSum(Tape<T>* tape, const Tensor<T>& a,
                      const Tensor<T>& weights);

// factor x factor non-overlapping mean pooling; H, W divisible by factor.
template <typename T>
Tensor<T> AvgPool(Tape<T>* tape, const Tensor<T>& x, int factor);

// Elementwise clamp into [lo, hi] (constant bounds, same shape as x). The
// gradient passes through where lo <= x <= hi and is zero outside.
template <typename T>
Tensor<T> BoxClamp(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& lo,
                   const Tensor<T>& hi);

// Fixed orthonormal 8x8 block DCT: (N, 1, H, W) -> (N, 64, H/8, W/8), channel
// 8u + v. No level shift.
template <typename T>
Tensor<T> BlockDctLayer(Tape<T>* tape, const Tensor<T>& x);

// Inverse of BlockDctLayer: (N, 64, h, w) -> (N, 1, 8h, 8w).
template <typename T>
Tensor<T> BlockIdctLayer(Tape<T>* tape, const Tensor<T>& x);

}  // namespace dualres

#endif  // DUALRES_OPS_H_
