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

#include "dualres/network.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "dualres/errors.h"
#include "dualres/fileutil.h"
#include "dualres/ops.h"

namespace dualres {

namespace {

struct LayerDef {
  std::string name;
  bool transposed = false;
  int cin = 0;
  int cout = 0;
  int kernel = 3;
  int stride = 1;
  int dilation = 1;
  int padding = 1;
  bool prelu = true;

  LayerSpec Spec() const {
    return transposed ? LayerSpec::TransposedConv(kernel, stride, padding)
                      : LayerSpec{LayerKind::kConv, kernel, kernel, stride,
                                  dilation, padding};
  }
};

LayerDef Conv(std::string name, int cin, int cout, int k = 3, int stride = 1,
              int dilation = 1, bool prelu = true) {
  return {std::move(name), false, cin, cout, k, stride, dilation,
          dilation * (k - 1) / 2, prelu};
}

LayerDef Up(std::string name, int cin, int cout) {
  return {std::move(name), true, cin, cout, 4, 2, 1, 1, true};
}

std::string MidName(std::size_t i) { return "mid" + std::to_string(i + 1); }

std::vector<LayerDef> DctLayers(const NetworkConfig& cfg) {
  const int c = cfg.base_channels;
  std::vector<LayerDef> l;
  l.push_back(Conv("dct.enc1", 64, c));
  l.push_back(Conv("dct.enc2", c, c));
  l.push_back(Conv("dct.enc3", c, c));
  for (std::size_t i = 0; i < cfg.bottleneck_dilations.size(); ++i) {
    l.push_back(Conv("dct." + MidName(i), c, c, 3, 1, cfg.bottleneck_dilations[i]));
  }
  l.push_back(Conv("dct.dec1", c, c));
  l.push_back(Conv("dct.dec2", c, c));
  l.push_back(Conv("dct.dec3", c, c));
  l.push_back(Conv("dct.out", c, 64, 1, 1, 1, false));
  return l;
}

// Order: longest path first (enc1..enc5, mids, dec1..dec5), heads last.
std::vector<LayerDef> PixelLayers(const NetworkConfig& cfg) {
  const int c = cfg.base_channels;
  std::vector<LayerDef> l;
  l.push_back(Conv("pix.enc1", 2, c));
  l.push_back(Conv("pix.enc2", c, 2 * c, 3, 2));
  l.push_back(Conv("pix.enc3", 2 * c, 2 * c));
  l.push_back(Conv("pix.enc4", 2 * c, 4 * c, 3, 2));
  l.push_back(Conv("pix.enc5", 4 * c, 4 * c));
  for (std::size_t i = 0; i < cfg.bottleneck_dilations.size(); ++i) {
    l.push_back(Conv("pix." + MidName(i), 4 * c, 4 * c, 3, 1,
                     cfg.bottleneck_dilations[i]));
  }
  l.push_back(Up("pix.dec1", 4 * c, 2 * c));
  l.push_back(Conv("pix.dec2", 2 * c, 2 * c));
  l.push_back(Up("pix.dec3", 2 * c, c));
  l.push_back(Conv("pix.dec4", c, c));
  l.push_back(Conv("pix.dec5", c, 1, 1, 1, 1, false));
  l.push_back(Conv("pix.head_half", 2 * c, 1, 1, 1, 1, false));
  l.push_back(Conv("pix.head_quarter", 4 * c, 1, 1, 1, 1, false));
  return l;
}

const LayerDef& FindLayer(const std::vector<LayerDef>& layers,
                          std::string_view name) {
  for (const auto& l : layers) {
    if (l.name == name) return l;
  }
  throw ArgumentError("unknown layer " + std::string(name));
}

template <typename T>
Tensor<T> Apply(const Model<T>& m, const LayerDef& d, const Tensor<T>& x,
                Tape<T>* tape) {
  const Tensor<T>& w = m.Param(d.name + ".weight");
  const Tensor<T>& b = m.Param(d.name + ".bias");
  Tensor<T> y = d.transposed
                    ? Conv2dTranspose(tape, x, w, b, d.stride, d.padding)
                    : Conv2d(tape, x, w, b,
                             ConvGeometry{d.stride, d.dilation, d.padding});
  if (d.prelu) y = PRelu(tape, y, m.Param(d.name + ".slope"));
  return y;
}

}  // namespace

void NetworkConfig::Validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("network config field '" + field + "' " + why);
  };
  if (base_channels < 1 || base_channels > 1024) {
    fail("base_channels", "must be in 1..1024");
  }
  if (bottleneck_dilations.empty()) fail("bottleneck_dilations", "is empty");
  for (int d : bottleneck_dilations) {
    if (d < 1 || d > 64) fail("bottleneck_dilations", "entries must be in 1..64");
  }
  if (pixel_depth != PixelBranchDepth(*this)) {
    fail("pixel_depth", "must be " + std::to_string(PixelBranchDepth(*this)) +
                            " for this bottleneck, got " +
                            std::to_string(pixel_depth));
  }
  if (dct_depth != DctBranchDepth(*this)) {
    fail("dct_depth", "must be " + std::to_string(DctBranchDepth(*this)) +
                          " for this bottleneck, got " +
                          std::to_string(dct_depth));
  }
  if (pixel_depth % 2 == 0 || dct_depth % 2 == 0) {
    fail("bottleneck_dilations", "must have odd length so depths are odd");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda", "must lie in [0, 1]");
  if (!(theta >= 0.0 && theta <= 1.0)) fail("theta", "must lie in [0, 1]");
  if (scales != 3) fail("scales", "is fixed at 3");
  if (!std::isfinite(r_init)) fail("r_init", "must be finite");
  if (!std::isfinite(prelu_init)) fail("prelu_init", "must be finite");
  if (!(output_init_scale >= 0.0 && output_init_scale <= 1.0)) {
    fail("output_init_scale", "must lie in [0, 1]");
  }
  if (!(pixel_scale > 0.0) || !std::isfinite(pixel_scale)) {
    fail("pixel_scale", "must be positive");
  }
  if (!std::isfinite(pixel_offset)) fail("pixel_offset", "must be finite");
  if (!(coeff_scale > 0.0) || !std::isfinite(coeff_scale)) {
    fail("coeff_scale", "must be positive");
  }
}

int PixelBranchDepth(const NetworkConfig& config) {
  // 5 encoder + bottleneck + 5 decoder + 2 side heads.
  return 12 + static_cast<int>(config.bottleneck_dilations.size());
}

int DctBranchDepth(const NetworkConfig& config) {
  // 3 encoder + bottleneck + 3 decoder; the 1x1 projection is not counted.
  return 6 + static_cast<int>(config.bottleneck_dilations.size());
}

std::vector<LayerSpec> PixelBranchLayerPath(const NetworkConfig& config) {
  std::vector<LayerSpec> path;
  for (const auto& l : PixelLayers(config)) {
    if (l.name.find("head") != std::string::npos) continue;
    path.push_back(l.Spec());
  }
  return path;
}

std::vector<LayerSpec> DctBranchLayerPath(const NetworkConfig& config) {
  std::vector<LayerSpec> path;
  for (const auto& l : DctLayers(config)) path.push_back(l.Spec());
  return path;
}

template <typename T>
Model<T>::Model(const Model& other) : config_(other.config_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) {
    params_.push_back({p.name, p.tensor.Clone(true)});
  }
}

template <typename T>
Model<T>& Model<T>::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Model<T> Model<T>::Build(const NetworkConfig& config, std::uint64_t seed) {
  config.Validate();
  Model m;
  m.config_ = config;
  std::mt19937_64 rng(seed);
  auto add_layers = [&](const std::vector<LayerDef>& layers) {
    for (const auto& l : layers) {
      const int taps = l.kernel * l.kernel;
      // Inputs feeding one output: a stride-s transposed kernel touches
      // (k/s)^2 positions per input channel.
      const int per_channel =
          l.transposed ? (l.kernel / l.stride) * (l.kernel / l.stride) : taps;
      const double bound = std::sqrt(6.0 / (l.cin * per_channel)) *
                           (l.prelu ? 1.0 : config.output_init_scale);
      std::uniform_real_distribution<double> dist(-bound, bound);
      const Shape wshape = l.transposed ? Shape{l.cin, l.cout, l.kernel, l.kernel}
                                        : Shape{l.cout, l.cin, l.kernel, l.kernel};
      std::vector<T> w(NumElements(wshape));
      for (T& v : w) v = static_cast<T>(static_cast<float>(dist(rng)));
      m.params_.push_back({l.name + ".weight", Tensor<T>(wshape, std::move(w), true)});
      m.params_.push_back({l.name + ".bias", Tensor<T>::Zeros({l.cout}, true)});
      if (l.prelu) {
        m.params_.push_back(
            {l.name + ".slope",
             Tensor<T>::Full({l.cout},
                             static_cast<T>(static_cast<float>(config.prelu_init)),
                             true)});
      }
    }
  };
  add_layers(DctLayers(config));
  add_layers(PixelLayers(config));
  m.params_.push_back(
      {"mix.r", Tensor<T>::Full({1}, static_cast<T>(static_cast<float>(config.r_init)),
                                true)});
  return m;
}

template <typename T>
const Tensor<T>& Model<T>::Param(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ArgumentError("model has no parameter '" + std::string(name) + "'");
}

template <typename T>
Tensor<T>& Model<T>::Param(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ArgumentError("model has no parameter '" + std::string(name) + "'");
}

template <typename T>
std::size_t Model<T>::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
std::uint64_t Model<T>::Digest() const {
  std::uint64_t h = Fnv1a64({});
  for (const auto& p : params_) {
    h = Fnv1a64(std::as_bytes(std::span(p.name)), h);
    for (T v : p.tensor.data()) {
      const float f = static_cast<float>(v);
      h = Fnv1a64(std::as_bytes(std::span(&f, 1)), h);
    }
  }
  return h;
}

template <typename T>
void Model<T>::ZeroWeights() {
  for (auto& p : params_) {
    const bool is_weight = p.name.ends_with(".weight") || p.name.ends_with(".bias");
    if (!is_weight) continue;
    auto d = p.tensor.mutable_data();
    std::fill(d.begin(), d.end(), T(0));
  }
}

template <typename T>
Tensor<T> StackPlanes(std::span<const ImagePlane* const> planes) {
  if (planes.empty()) throw ArgumentError("cannot stack zero planes");
  const int w = planes[0]->width, h = planes[0]->height;
  std::vector<T> data;
  data.reserve(planes.size() * static_cast<std::size_t>(w) * h);
  for (const ImagePlane* p : planes) {
    if (p->width != w || p->height != h) {
      throw ArgumentError("cannot stack planes of different sizes");
    }
    for (double v : p->samples) data.push_back(static_cast<T>(v));
  }
  return Tensor<T>({static_cast<int>(planes.size()), 1, h, w}, std::move(data));
}

template <typename T>
ImagePlane PlaneFromTensor(const Tensor<T>& t, int index) {
  if (t.rank() != 4 || t.dim(1) != 1 || index < 0 || index >= t.dim(0)) {
    throw ArgumentError("expected an (N, 1, H, W) tensor, got " +
                        ShapeString(t.shape()));
  }
  ImagePlane plane(t.dim(3), t.dim(2));
  const std::size_t off = static_cast<std::size_t>(index) * plane.size();
  for (std::size_t i = 0; i < plane.size(); ++i) {
    plane.samples[i] = static_cast<double>(t.data()[off + i]);
  }
  return plane;
}

template <typename T>
NetworkInput<T> MakeNetworkInput(std::span<const ImagePlane* const> decoded,
                                 std::span<const CoeffGrid* const> cdct,
                                 std::span<const QuantTable* const> tables) {
  if (decoded.size() != cdct.size() || decoded.size() != tables.size()) {
    throw ArgumentError("network input: mismatched batch lengths");
  }
  NetworkInput<T> in;
  in.degraded = StackPlanes<T>(decoded);
  const int n = static_cast<int>(decoded.size());
  const int bh = cdct[0]->blocks_h, bw = cdct[0]->blocks_w;
  const std::size_t grid = static_cast<std::size_t>(bh) * bw;
  std::vector<T> lo(n * kBlockArea * grid), hi(lo.size());
  for (int i = 0; i < n; ++i) {
    const CoeffGrid& g = *cdct[i];
    if (g.blocks_h * kBlock != decoded[i]->height ||
        g.blocks_w * kBlock != decoded[i]->width || g.blocks_h != bh ||
        g.blocks_w != bw) {
      throw ArgumentError("network input: coefficient grid " +
                          std::to_string(g.blocks_h) + "x" +
                          std::to_string(g.blocks_w) +
                          " does not match decoded plane " +
                          std::to_string(decoded[i]->width) + "x" +
                          std::to_string(decoded[i]->height));
    }
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        const double* c = g.block(by, bx);
        const std::size_t cell = static_cast<std::size_t>(by) * bw + bx;
        for (int k = 0; k < kBlockArea; ++k) {
          const double half = 0.5 * tables[i]->steps[k];
          const std::size_t idx = (static_cast<std::size_t>(i) * kBlockArea + k) * grid + cell;
          lo[idx] = static_cast<T>(c[k] - half);
          hi[idx] = static_cast<T>(c[k] + half);
        }
      }
    }
  }
  in.lo = Tensor<T>({n, kBlockArea, bh, bw}, std::move(lo));
  in.hi = Tensor<T>({n, kBlockArea, bh, bw}, std::move(hi));
  return in;
}

template <typename T>
NetworkInput<T> MakeNetworkInput(const ImagePlane& decoded,
                                 const CoeffGrid& cdct, const QuantTable& table) {
  const ImagePlane* d[] = {&decoded};
  const CoeffGrid* c[] = {&cdct};
  const QuantTable* t[] = {&table};
  return MakeNetworkInput<T>(d, c, t);
}

template <typename T>
PixelBranchOutput<T> PixelBranchForward(const Model<T>& model,
                                        const Tensor<T>& input, Tape<T>* tape) {
  if (input.rank() != 4 || input.dim(1) != 2 || input.dim(2) % 4 ||
      input.dim(3) % 4) {
    throw ArgumentError("pixel branch expects (N, 2, 4h, 4w), got " +
                        ShapeString(input.shape()));
  }
  const auto layers = PixelLayers(model.config());
  auto L = [&](const char* name, const Tensor<T>& x) {
    return Apply(model, FindLayer(layers, name), x, tape);
  };
  Tensor<T> e1 = L("pix.enc1", input);
  Tensor<T> e2 = L("pix.enc2", e1);
  Tensor<T> e3 = L("pix.enc3", e2);
  Tensor<T> e4 = L("pix.enc4", e3);
  Tensor<T> e5 = L("pix.enc5", e4);
  Tensor<T> m = e5;
  for (std::size_t i = 0; i < model.config().bottleneck_dilations.size(); ++i) {
    m = Apply(model, FindLayer(layers, "pix." + MidName(i)), m, tape);
  }
  m = Add(tape, m, e5);
  PixelBranchOutput<T> out;
  out.quarter = L("pix.head_quarter", m);
  Tensor<T> d1 = Add(tape, L("pix.dec1", m), e3);
  Tensor<T> d2 = L("pix.dec2", d1);
  out.half = L("pix.head_half", d2);
  Tensor<T> d3 = Add(tape, L("pix.dec3", d2), e1);
  Tensor<T> d4 = L("pix.dec4", d3);
  out.full = L("pix.dec5", d4);
  return out;
}

template <typename T>
Tensor<T> DctBranchForward(const Model<T>& model, const Tensor<T>& input,
                           Tape<T>* tape) {
  if (input.rank() != 4 || input.dim(1) != kBlockArea) {
    throw ArgumentError("DCT branch expects (N, 64, h, w), got " +
                        ShapeString(input.shape()));
  }
  const auto layers = DctLayers(model.config());
  auto L = [&](const char* name, const Tensor<T>& x) {
    return Apply(model, FindLayer(layers, name), x, tape);
  };
  Tensor<T> x1 = L("dct.enc1", input);
  Tensor<T> x2 = L("dct.enc2", x1);
  Tensor<T> x3 = L("dct.enc3", x2);
  Tensor<T> m = x3;
  for (std::size_t i = 0; i < model.config().bottleneck_dilations.size(); ++i) {
    m = Apply(model, FindLayer(layers, "dct." + MidName(i)), m, tape);
  }
  Tensor<T> y = Add(tape, L("dct.dec1", m), x3);
  y = Add(tape, L("dct.dec2", y), x2);
  y = Add(tape, L("dct.dec3", y), x1);
  return L("dct.out", y);
}

template <typename T>
ForwardOutput<T> Forward(const Model<T>& model, const NetworkInput<T>& input,
                         Tape<T>* tape) {
  const NetworkConfig& cfg = model.config();
  const Tensor<T>& c = input.degraded;
  if (c.rank() != 4 || c.dim(1) != 1 || c.dim(2) % kBlock || c.dim(3) % kBlock) {
    throw ArgumentError("forward expects a block-aligned (N, 1, H, W) input, got " +
                        ShapeString(c.shape()));
  }
  const Shape grid = {c.dim(0), kBlockArea, c.dim(2) / kBlock, c.dim(3) / kBlock};
  if (input.lo.shape() != grid || input.hi.shape() != grid) {
    throw ArgumentError("forward: quantization box " + ShapeString(input.lo.shape()) +
                        " does not match input " + ShapeString(c.shape()));
  }
  ForwardOutput<T> out;
  // DCT branch: residual in coefficient space, projected onto the box.
  Tensor<T> coef = BlockDctLayer(tape, Affine(tape, c, 1.0, -128.0));
  Tensor<T> res = DctBranchForward(model, Affine(tape, coef, cfg.coeff_scale, 0.0), tape);
  Tensor<T> est = Add(tape, coef, Affine(tape, res, 1.0 / cfg.coeff_scale, 0.0));
  out.coeffs = BoxClamp(tape, est, input.lo, input.hi);
  out.od = Affine(tape, BlockIdctLayer(tape, out.coeffs), 1.0, 128.0);

  // Pixel branch on concat(C, O_D).
  Tensor<T> pin = Affine(tape, ConcatChannels(tape, c, out.od), cfg.pixel_scale,
                         cfg.pixel_offset);
  PixelBranchOutput<T> g = PixelBranchForward(model, pin, tape);
  const double unscale = 1.0 / cfg.pixel_scale;
  out.r = model.Param("mix.r");
  Tensor<T> mixed = Add(tape, c, Scale(tape, Sub(tape, out.od, c), out.r));
  out.o0 = Add(tape, Affine(tape, g.full, unscale, 0.0), mixed);
  out.o1 = Add(tape, Affine(tape, g.half, unscale, 0.0), AvgPool(tape, c, 2));
  out.o2 = Add(tape, Affine(tape, g.quarter, unscale, 0.0), AvgPool(tape, c, 4));
  return out;
}

template <typename T>
Tensor<T> Loss(Tape<T>* tape, const ForwardOutput<T>& out,
               const Tensor<T>& clean, const NetworkConfig& config) {
  if (clean.shape() != out.o0.shape()) {
    throw ArgumentError("loss: clean " + ShapeString(clean.shape()) +
                        " does not match output " + ShapeString(out.o0.shape()));
  }
  const Tensor<T> o1 = AvgPool<T>(nullptr, clean, 2);
  const Tensor<T> o2 = AvgPool<T>(nullptr, clean, 4);
  Tensor<T> loss = Mse(tape, out.o0, clean);
  loss = Add(tape, loss, Affine(tape, Mse(tape, out.o1, o1), config.theta, 0.0));
  loss = Add(tape, loss,
             Affine(tape, Mse(tape, out.o2, o2), config.theta * config.theta, 0.0));
  loss = Add(tape, loss, Affine(tape, Mse(tape, out.od, clean), config.lambda, 0.0));
  return loss;
}

namespace {

template <typename Branch>
ReceptiveField MeasureBranch(int channels, int side, int period, Branch&& branch) {
  ReceptiveField worst;
  for (int phase = 0; phase < period; ++phase) {
    Tape<float> tape;
    Tensor<float> input = Tensor<float>::Full({1, channels, side, side}, 0.25f, true);
    Tensor<float> y = branch(input, &tape);
    std::vector<float> probe(y.numel(), 0.0f);
    const int oh = y.dim(2), ow = y.dim(3);
    probe[static_cast<std::size_t>(oh / 2 + phase) * ow + ow / 2 + phase] = 1.0f;
    Tensor<float> loss = WeightedSum(&tape, y, Tensor<float>(y.shape(), std::move(probe)));
    Gradients<float> grads = tape.Backward(loss);
    const Footprint fp = NonzeroFootprint(input, grads.View(input));
    worst.height = std::max(worst.height, fp.height);
    worst.width = std::max(worst.width, fp.width);
  }
  return worst;
}

}  // namespace

ReceptiveField MeasurePixelBranchReceptiveField(const NetworkConfig& config,
                                                std::uint64_t seed) {
  const auto path = PixelBranchLayerPath(config);
  const ReceptiveField expect = AnalyticReceptiveField(path);
  const int side = (2 * std::max(expect.height, expect.width) + 16 + 3) / 4 * 4;
  const Model<float> model = Model<float>::Build(config, seed);
  return MeasureBranch(2, side, UpsamplingPeriod(path),
                       [&](const Tensor<float>& x, Tape<float>* tape) {
                         return PixelBranchForward(model, x, tape).full;
                       });
}

ReceptiveField MeasureDctBranchReceptiveField(const NetworkConfig& config,
                                              std::uint64_t seed) {
  const auto path = DctBranchLayerPath(config);
  const ReceptiveField expect = AnalyticReceptiveField(path);
  const int side = 2 * std::max(expect.height, expect.width) + 8;
  const Model<float> model = Model<float>::Build(config, seed);
  // The probe sits in output channel 0 (the DC residual).
  return MeasureBranch(kBlockArea, side, UpsamplingPeriod(path),
                       [&](const Tensor<float>& x, Tape<float>* tape) {
                         return DctBranchForward(model, x, tape);
                       });
}

ImagePlane DownscaleTarget(const ImagePlane& clean, int level) {
  if (level < 0 || level > 2) {
    throw ArgumentError("downscale level must be 0..2, got " + std::to_string(level));
  }
  const int f = 1 << level;
  if (clean.width % f || clean.height % f) {
    throw ArgumentError("plane " + std::to_string(clean.width) + "x" +
                        std::to_string(clean.height) + " not divisible by " +
                        std::to_string(f));
  }
  if (f == 1) return clean;
  ImagePlane out(clean.width / f, clean.height / f);
  for (int y = 0; y < clean.height; ++y) {
    for (int x = 0; x < clean.width; ++x) out.at(x / f, y / f) += clean.at(x, y);
  }
  for (double& v : out.samples) v /= f * f;
  return out;
}

template <typename T>
ImagePlane Restore(const Model<T>& model, const ImagePlane& degraded,
                   const CoeffGrid& cdct, const QuantTable& table) {
  const int pw = (degraded.width + 7) / 8 * 8;
  const int ph = (degraded.height + 7) / 8 * 8;
  if (cdct.blocks_w * kBlock != pw || cdct.blocks_h * kBlock != ph) {
    throw ArgumentError("restore: coefficient grid does not cover the image");
  }
  ImagePlane padded = degraded;
  if (pw != degraded.width || ph != degraded.height) {
    // The padding region is what the decoder produced there, not a
    // replication of the cropped edge.
    padded = BlockIdct(cdct);
    ClampInPlace(padded);
    for (int y = 0; y < degraded.height; ++y) {
      for (int x = 0; x < degraded.width; ++x) padded.at(x, y) = degraded.at(x, y);
    }
  }
  const NetworkInput<T> input = MakeNetworkInput<T>(padded, cdct, table);
  const ForwardOutput<T> out = Forward<T>(model, input, nullptr);
  ImagePlane restored = PlaneFromTensor(out.o0);
  ClampInPlace(restored);
  return Crop(restored, 0, 0, degraded.width, degraded.height);
}

#define DUALRES_INSTANTIATE_NETWORK(T)                                          \
  template class Model<T>;                                                      \
  template Tensor<T> StackPlanes<T>(std::span<const ImagePlane* const>);        \
  template ImagePlane PlaneFromTensor<T>(const Tensor<T>&, int);                \
  template NetworkInput<T> MakeNetworkInput<T>(                                 \
      std::span<const ImagePlane* const>, std::span<const CoeffGrid* const>,    \
      std::span<const QuantTable* const>);                                      \
  template NetworkInput<T> MakeNetworkInput<T>(                                 \
      const ImagePlane&, const CoeffGrid&, const QuantTable&);                  \
  template PixelBranchOutput<T> PixelBranchForward(const Model<T>&,             \
                                                   const Tensor<T>&, Tape<T>*); \
  template Tensor<T> DctBranchForward(const Model<T>&, const Tensor<T>&,        \
                                      Tape<T>*);                                \
  template ForwardOutput<T> Forward(const Model<T>&, const NetworkInput<T>&,    \
                                    Tape<T>*);                                  \
  template Tensor<T> Loss(Tape<T>*, const ForwardOutput<T>&, const Tensor<T>&,  \
                          const NetworkConfig&);                                \
  template ImagePlane Restore(const Model<T>&, const ImagePlane&,               \
                              const CoeffGrid&, const QuantTable&);

DUALRES_INSTANTIATE_NETWORK(float)
DUALRES_INSTANTIATE_NETWORK(double)

#undef DUALRES_INSTANTIATE_NETWORK

}  // namespace dualres
