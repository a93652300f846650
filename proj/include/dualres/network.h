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

// Dual-domain restoration network.
//
// The DCT branch f works on the 64-channel block-DCT grid of the decoded
// image C, predicts a coefficient residual, and its output is projected onto
// the quantization box before the fixed inverse DCT yields the estimate O_D.
// The pixel branch g sees concat(C, O_D) and is an encoder/decoder with two
// stride-2 stages, a dilated bottleneck and one output head per scale. The
// full-scale result mixes both branches:
//
//   O_0 = g(C, O_D) + r O_D + (1 - r) C,   r learnable.
//
// Half and quarter scale outputs are head residuals added to the pooled C.
//
// Layout (c = base_channels, "d" = dilation):
//   DCT branch    enc 3x[3x3 c] | mid [3x3 d=2,4,8] | dec 3x[3x3 c] | 1x1 -> 64
//                 with additive shortcuts enc_i -> dec_(4-i).
//   pixel branch  enc1 3x3 c, enc2 3x3/2 2c, enc3 3x3 2c, enc4 3x3/2 4c,
//                 enc5 3x3 4c | mid [3x3 4c d=2,4,8] (+enc5) | head 1x1 @1/4
//                 dec1 4x4 tconv/2 2c (+enc3), dec2 3x3 2c | head 1x1 @1/2
//                 dec3 4x4 tconv/2 c (+enc1), dec4 3x3 c, dec5 1x1 @1
// Every layer except heads and the DCT output projection is followed by a
// per-channel PReLU.

#ifndef DUALRES_NETWORK_H_
#define DUALRES_NETWORK_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dualres/image.h"
#include "dualres/jpeg.h"
#include "dualres/receptive_field.h"
#include "dualres/tensor.h"

namespace dualres {

struct NetworkConfig {
  int pixel_depth = 15;
  int dct_depth = 9;
  int base_channels = 64;
  std::vector<int> bottleneck_dilations{2, 4, 8};
  double r_init = 0.5;
  double prelu_init = 0.1;
  // Kaiming bound multiplier for the layers that end a branch (no PReLU).
  double output_init_scale = 0.1;
  double lambda = 0.9;  // weight of the DCT-branch term
  double theta = 0.618;  // per-scale decay of the multi-scale terms
  int scales = 3;
  // Pixel inputs enter the pixel branch as x * pixel_scale + pixel_offset;
  // coefficients enter the DCT branch as x * coeff_scale.
  double pixel_scale = 1.0 / 255.0;
  double pixel_offset = -0.5;
  double coeff_scale = 1.0 / (8.0 * 255.0);

  // Throws ConfigError naming the offending field.
  void Validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Depths implied by the layout for a given bottleneck.
int PixelBranchDepth(const NetworkConfig& config);
int DctBranchDepth(const NetworkConfig& config);

// Longest input-to-output path of each branch, for receptive-field analysis.
// DCT-branch units are coefficient-grid cells (8x8 pixel blocks).
std::vector<LayerSpec> PixelBranchLayerPath(const NetworkConfig& config);
std::vector<LayerSpec> DctBranchLayerPath(const NetworkConfig& config);

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
class Model {
 public:
  Model() = default;
  // Copies are deep: the copy owns fresh parameter buffers.
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  // Kaiming-uniform fan-in kernels (output layers scaled by
  // output_init_scale), zero biases, PReLU slopes at prelu_init
  // and r at r_init. Values are drawn as float32 so float and double builds
  // from the same seed agree exactly.
  static Model Build(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  std::vector<NamedParameter<T>>& parameters() { return params_; }
  const std::vector<NamedParameter<T>>& parameters() const { return params_; }

  // Throws ArgumentError for unknown names.
  const Tensor<T>& Param(std::string_view name) const;
  Tensor<T>& Param(std::string_view name);

  std::size_t ParameterCount() const;
  // FNV-1a over names and float32 values; identical across float/double.
  std::uint64_t Digest() const;

  // Sets every kernel and bias to zero, leaving r and PReLU slopes.
  void ZeroWeights();

  template <typename U>
  Model<U> Cast() const {
    Model<U> out;
    out.config_ = config_;
    for (const auto& p : params_) {
      std::vector<U> data(p.tensor.data().begin(), p.tensor.data().end());
      out.params_.push_back({p.name, Tensor<U>(p.tensor.shape(), std::move(data), true)});
    }
    return out;
  }

 private:
  template <typename U>
  friend class Model;

  NetworkConfig config_;
  std::vector<NamedParameter<T>> params_;
};

// Batched network input. degraded is the decoded image C in pixel units
// (N, 1, H, W); lo/hi are the quantization box of the DCT grid, (N, 64, H/8,
// W/8) in coefficient units.
template <typename T>
struct NetworkInput {
  Tensor<T> degraded;
  Tensor<T> lo;
  Tensor<T> hi;
};

// decoded must be block-aligned and match cdct.
template <typename T>
NetworkInput<T> MakeNetworkInput(std::span<const ImagePlane* const> decoded,
                                 std::span<const CoeffGrid* const> cdct,
                                 std::span<const QuantTable* const> tables);

template <typename T>
NetworkInput<T> MakeNetworkInput(const ImagePlane& decoded,
                                 const CoeffGrid& cdct, const QuantTable& table);

// Stacks planes into (N, 1, H, W).
template <typename T>
Tensor<T> StackPlanes(std::span<const ImagePlane* const> planes);

template <typename T>
ImagePlane PlaneFromTensor(const Tensor<T>& t, int index = 0);

template <typename T>
struct ForwardOutput {
  Tensor<T> o0;      // (N, 1, H, W)
  Tensor<T> o1;      // (N, 1, H/2, W/2)
  Tensor<T> o2;      // (N, 1, H/4, W/4)
  Tensor<T> od;      // DCT-branch estimate in pixel units
  Tensor<T> coeffs;  // rectified DCT-branch coefficients
  Tensor<T> r;
};

template <typename T>
struct PixelBranchOutput {
  Tensor<T> full;
  Tensor<T> half;
  Tensor<T> quarter;
};

// Pixel branch alone on a normalized (N, 2, H, W) input, H and W divisible
// by 4. Outputs are normalized residuals.
template <typename T>
PixelBranchOutput<T> PixelBranchForward(const Model<T>& model,
                                        const Tensor<T>& input, Tape<T>* tape);

// DCT branch alone on a normalized (N, 64, h, w) grid; returns the normalized
// coefficient residual.
template <typename T>
Tensor<T> DctBranchForward(const Model<T>& model, const Tensor<T>& input,
                           Tape<T>* tape);

template <typename T>
ForwardOutput<T> Forward(const Model<T>& model, const NetworkInput<T>& input,
                         Tape<T>* tape);

// sum_i theta^i MSE(O~_i, O_i) + lambda MSE(O~_D, O_0); clean is (N,1,H,W).
template <typename T>
Tensor<T> Loss(Tape<T>* tape, const ForwardOutput<T>& out,
               const Tensor<T>& clean, const NetworkConfig& config);

// Impulse oracle on the branches of a freshly built model (all channels and
// shortcuts): one-hot gradients at output pixels near the centre, one per
// upsampling phase, are propagated back and the largest nonzero input
// footprint reported. DCT-branch units are grid cells.
ReceptiveField MeasurePixelBranchReceptiveField(const NetworkConfig& config,
                                                std::uint64_t seed = 7);
ReceptiveField MeasureDctBranchReceptiveField(const NetworkConfig& config,
                                              std::uint64_t seed = 7);

// 2^level x 2^level mean pooling.
ImagePlane DownscaleTarget(const ImagePlane& clean, int level);

// Inference on one image of any size: pads to the block grid, runs the
// network without recording, clamps O_0 to [0, 255] and crops.
template <typename T>
ImagePlane Restore(const Model<T>& model, const ImagePlane& degraded,
                   const CoeffGrid& cdct, const QuantTable& table);

}  // namespace dualres

#endif  // DUALRES_NETWORK_H_
