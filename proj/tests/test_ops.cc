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

#include <cmath>
#include <random>

#include "doctest.h"
#include "dualres/errors.h"
#include "dualres/jpeg.h"
#include "dualres/ops.h"
#include "test_support.h"

namespace dualres {
namespace {

using testing::MaxGradientError;
using testing::RandomTensor;

// Direct nested-loop cross-correlation.
std::vector<double> NaiveConv(const Tensor<double>& x, const Tensor<double>& w,
                              const Tensor<double>& b, int stride, int dilation, int pad) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h + 2 * pad - dilation * (kh - 1) - 1) / stride + 1;
  const int ow = (wd + 2 * pad - dilation * (kw - 1) - 1) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n) * cout * oh * ow);
  auto X = [&](int i, int c, int y, int xx) {
    return x.data()[((static_cast<std::size_t>(i) * cin + c) * h + y) * wd + xx];
  };
  auto W = [&](int o, int c, int ky, int kx) {
    return w.data()[((static_cast<std::size_t>(o) * cin + c) * kh + ky) * kw + kx];
  };
  for (int i = 0; i < n; ++i)
    for (int o = 0; o < cout; ++o)
      for (int py = 0; py < oh; ++py)
        for (int px = 0; px < ow; ++px) {
          double s = b.defined() ? b.data()[o] : 0.0;
          for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int y = py * stride - pad + dilation * ky;
                const int xx = px * stride - pad + dilation * kx;
                if (y >= 0 && y < h && xx >= 0 && xx < wd) s += X(i, c, y, xx) * W(o, c, ky, kx);
              }
          out[((static_cast<std::size_t>(i) * cout + o) * oh + py) * ow + px] = s;
        }
  return out;
}

// Transposed convolution by scattering each input sample.
std::vector<double> NaiveConvTranspose(const Tensor<double>& x, const Tensor<double>& w,
                                       int stride, int pad) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(1), k = w.dim(2);
  const int oh = (h - 1) * stride - 2 * pad + k, ow = (wd - 1) * stride - 2 * pad + k;
  std::vector<double> out(static_cast<std::size_t>(n) * cout * oh * ow, 0.0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < cin; ++c)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < wd; ++xx) {
          const double v = x.data()[((static_cast<std::size_t>(i) * cin + c) * h + y) * wd + xx];
          for (int o = 0; o < cout; ++o)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int oy = y * stride - pad + ky, ox = xx * stride - pad + kx;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                out[((static_cast<std::size_t>(i) * cout + o) * oh + oy) * ow + ox] +=
                    v * w.data()[((static_cast<std::size_t>(c) * cout + o) * k + ky) * k + kx];
              }
        }
  return out;
}

void CheckClose(std::span<const double> a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(a[i] - b[i]) < tol);
}

TEST_CASE("conv2d dilated impulse response") {
  Tensor<double> x = Tensor<double>::Zeros({1, 1, 9, 9});
  x.mutable_data()[4 * 9 + 4] = 1.0;
  const auto y = Conv2d<double>(nullptr, x, Tensor<double>::Full({1, 1, 3, 3}, 1.0),
                                Tensor<double>(), ConvGeometry{1, 2, 2});
  REQUIRE(y.shape() == Shape{1, 1, 9, 9});
  for (int r = 0; r < 9; ++r) {
    for (int c = 0; c < 9; ++c) {
      const bool hit = (r == 2 || r == 4 || r == 6) && (c == 2 || c == 4 || c == 6);
      CHECK(y.data()[r * 9 + c] == (hit ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("conv2d identity kernel") {
  std::mt19937_64 rng(31);
  const auto x = RandomTensor<double>(rng, {2, 1, 7, 5}, -1, 1, false);
  Tensor<double> k = Tensor<double>::Zeros({1, 1, 3, 3});
  k.mutable_data()[4] = 1.0;
  const auto y = Conv2d<double>(nullptr, x, k, Tensor<double>(), ConvGeometry{1, 1, 1});
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) ==
        std::vector<double>(x.data().begin(), x.data().end()));
}

TEST_CASE("conv2d matches a nested-loop oracle") {
  std::mt19937_64 rng(32);
  struct Case { int cin, cout, k, stride, dilation, pad, h, w; };
  for (const Case c : {Case{1, 1, 3, 1, 1, 1, 5, 5}, Case{3, 4, 3, 1, 1, 0, 5, 5},
                       Case{2, 3, 3, 2, 1, 1, 9, 8}, Case{2, 2, 3, 1, 3, 3, 10, 7},
                       Case{4, 2, 1, 1, 1, 0, 6, 6}, Case{2, 5, 5, 2, 2, 4, 13, 11}}) {
    const auto x = RandomTensor<double>(rng, {2, c.cin, c.h, c.w}, -1, 1, false);
    const auto w = RandomTensor<double>(rng, {c.cout, c.cin, c.k, c.k}, -1, 1, false);
    const auto b = RandomTensor<double>(rng, {c.cout}, -1, 1, false);
    const auto y = Conv2d<double>(nullptr, x, w, b, ConvGeometry{c.stride, c.dilation, c.pad});
    CHECK(y.dim(2) == ConvOutputSize(c.h, c.k, {c.stride, c.dilation, c.pad}));
    CheckClose(y.data(), NaiveConv(x, w, b, c.stride, c.dilation, c.pad), 1e-12);
  }
}

TEST_CASE("conv2d shape errors name both shapes") {
  const auto x = Tensor<double>::Zeros({1, 3, 8, 8});
  const auto w = Tensor<double>::Zeros({4, 2, 3, 3});
  try {
    Conv2d<double>(nullptr, x, w, Tensor<double>(), ConvGeometry{1, 1, 1});
    FAIL("expected an argument error");
  } catch (const ArgumentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1, 3, 8, 8)") != std::string::npos);
    CHECK(msg.find("(4, 2, 3, 3)") != std::string::npos);
  }
  CHECK_THROWS_AS(Conv2d<double>(nullptr, x, Tensor<double>::Zeros({4, 3, 3, 3}),
                                 Tensor<double>::Zeros({5}), ConvGeometry{1, 1, 1}),
                  ArgumentError);
}

TEST_CASE("conv2d_transpose sizes, bias and oracle") {
  std::mt19937_64 rng(33);
  const auto x = RandomTensor<double>(rng, {1, 3, 14, 14}, -1, 1, false);
  const auto w = RandomTensor<double>(rng, {3, 2, 4, 4}, -1, 1, false);
  const auto y = Conv2dTranspose<double>(nullptr, x, w, Tensor<double>(), 2, 1);
  CHECK(y.shape() == Shape{1, 2, 28, 28});
  CHECK(ConvTransposeOutputSize(14, 4, 2, 1) == 28);
  CheckClose(y.data(), NaiveConvTranspose(x, w, 2, 1), 1e-12);

  const auto z = Conv2dTranspose<double>(nullptr, Tensor<double>::Zeros({1, 3, 5, 5}), w,
                                         Tensor<double>::Full({2}, 0.25), 2, 1);
  for (double v : z.data()) CHECK(v == 0.25);

  const auto s1 = RandomTensor<double>(rng, {2, 2, 6, 5}, -1, 1, false);
  const auto w1 = RandomTensor<double>(rng, {2, 3, 3, 3}, -1, 1, false);
  CheckClose(Conv2dTranspose<double>(nullptr, s1, w1, Tensor<double>(), 1, 1).data(),
             NaiveConvTranspose(s1, w1, 1, 1), 1e-12);
}

TEST_CASE("conv2d_transpose equals conv backward-data") {
  std::mt19937_64 rng(34);
  for (int stride : {1, 2}) {
    const int k = stride == 2 ? 4 : 3;
    const int in = 7;
    const auto dy = RandomTensor<float>(rng, {2, 5, in, in}, -1, 1, false);
    // Conv weight (Cout=5, Cin=3); the transposed op reads it as (Cin=5, Cout=3).
    const auto w = RandomTensor<float>(rng, {5, 3, k, k}, -1, 1, false);
    const int out = ConvTransposeOutputSize(in, k, stride, 1);
    const auto a = Conv2dTranspose<float>(nullptr, dy, w, Tensor<float>(), stride, 1);
    const auto b = Conv2dBackwardData<float>(dy, w, ConvGeometry{stride, 1, 1}, out, out);
    REQUIRE(a.shape() == b.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-6);
  }
}

TEST_CASE("prelu, add, scale and concat examples") {
  const auto x = Tensor<double>({1, 2, 1, 1}, {-2.0, 3.0});
  const auto y = PRelu<double>(nullptr, x, Tensor<double>::Full({2}, 0.1));
  CHECK(y.data()[0] == doctest::Approx(-0.2));
  CHECK(y.data()[1] == 3.0);
  const auto id = PRelu<double>(nullptr, x, Tensor<double>::Full({2}, 1.0));
  CHECK(id.data()[0] == -2.0);
  CHECK_THROWS_AS(PRelu<double>(nullptr, x, Tensor<double>::Full({3}, 0.1)), ArgumentError);

  const auto z = Scale<double>(nullptr, x, Tensor<double>::Full({1}, 0.0));
  for (double v : z.data()) CHECK(v == 0.0);
  const auto s = Add<double>(nullptr, x, Tensor<double>::Zeros({1, 2, 1, 1}));
  CHECK(std::vector<double>(s.data().begin(), s.data().end()) == std::vector<double>{-2.0, 3.0});
  CHECK_THROWS_AS(Add<double>(nullptr, x, Tensor<double>::Zeros({1, 1, 1, 2})), ArgumentError);

  const auto cat = ConcatChannels<double>(nullptr, Tensor<double>::Full({1, 3, 8, 8}, 1.0),
                                          Tensor<double>::Full({1, 1, 8, 8}, 2.0));
  CHECK(cat.shape() == Shape{1, 4, 8, 8});
  CHECK(cat.data()[3 * 64] == 2.0);
  CHECK(cat.data()[3 * 64 - 1] == 1.0);
  CHECK_THROWS_AS(ConcatChannels<double>(nullptr, Tensor<double>::Zeros({1, 1, 8, 8}),
                                         Tensor<double>::Zeros({1, 1, 4, 8})),
                  ArgumentError);
}

TEST_CASE("mse, avg_pool and box_clamp examples") {
  const auto a = Tensor<double>::Full({3}, 1.25);
  CHECK(Mse<double>(nullptr, a, a).item() == 0.0);
  CHECK(Mse<double>(nullptr, Tensor<double>({1}, {2.0}), Tensor<double>({1}, {0.0})).item() == 4.0);
  CHECK_THROWS_AS(Mse<double>(nullptr, a, Tensor<double>::Zeros({4})), ArgumentError);

  const auto p = AvgPool<double>(nullptr, Tensor<double>({1, 1, 2, 2}, {0, 2, 4, 6}), 2);
  CHECK(p.shape() == Shape{1, 1, 1, 1});
  CHECK(p.item() == 3.0);
  CHECK_THROWS_AS(AvgPool<double>(nullptr, Tensor<double>::Zeros({1, 1, 3, 4}), 2), ArgumentError);

  const auto c = BoxClamp<double>(nullptr, Tensor<double>({3}, {13, 20, 16}),
                                  Tensor<double>::Full({3}, 14), Tensor<double>::Full({3}, 18));
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) == std::vector<double>{14, 18, 16});
}

TEST_CASE("block DCT layers agree with the codec transform") {
  std::mt19937_64 rng(35);
  const ImagePlane p = testing::RandomPlane(rng, 24, 16);
  Tensor<double> x({1, 1, 16, 24}, std::vector<double>(p.samples));
  const auto coef = BlockDctLayer<double>(nullptr, Affine<double>(nullptr, x, 1.0, -128.0));
  REQUIRE(coef.shape() == Shape{1, 64, 2, 3});
  const CoeffGrid g = BlockDct(p);
  for (int by = 0; by < 2; ++by)
    for (int bx = 0; bx < 3; ++bx)
      for (int c = 0; c < 64; ++c)
        CHECK(coef.data()[(static_cast<std::size_t>(c) * 2 + by) * 3 + bx] ==
              doctest::Approx(g.block(by, bx)[c]).epsilon(1e-12));
  const auto back = BlockIdctLayer<double>(nullptr, coef);
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    CHECK(std::abs(back.data()[i] + 128.0 - p.samples[i]) < 1e-10);
  }
  CHECK_THROWS_AS(BlockDctLayer<double>(nullptr, Tensor<double>::Zeros({1, 1, 12, 8})),
                  ArgumentError);
  CHECK_THROWS_AS(BlockIdctLayer<double>(nullptr, Tensor<double>::Zeros({1, 63, 1, 1})),
                  ArgumentError);
}

// Finite-difference checks: loss = sum(op(...) * r) with fixed random r.
constexpr double kOpTolerance = 1e-4;

Tensor<double> Probe(Tape<double>* tape, const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return WeightedSum(tape, y, RandomTensor<double>(rng, y.shape(), -1, 1, false));
}

TEST_CASE("gradient check: conv2d") {
  std::mt19937_64 rng(41);
  for (ConvGeometry g : {ConvGeometry{1, 1, 1}, ConvGeometry{2, 1, 1}, ConvGeometry{1, 2, 2},
                         ConvGeometry{1, 4, 4}}) {
    Tensor<double> x = RandomTensor<double>(rng, {2, 3, 9, 8});
    Tensor<double> w = RandomTensor<double>(rng, {4, 3, 3, 3});
    Tensor<double> b = RandomTensor<double>(rng, {4});
    auto f = [&](Tape<double>* t) { return Probe(t, Conv2d(t, x, w, b, g), 1); };
    CHECK(MaxGradientError(rng, x, f) < kOpTolerance);
    CHECK(MaxGradientError(rng, w, f) < kOpTolerance);
    CHECK(MaxGradientError(rng, b, f) < kOpTolerance);
  }
  Tensor<double> x = RandomTensor<double>(rng, {1, 5, 6, 6});
  Tensor<double> w = RandomTensor<double>(rng, {2, 5, 1, 1});
  Tensor<double> b = RandomTensor<double>(rng, {2});
  auto f = [&](Tape<double>* t) { return Probe(t, Conv2d(t, x, w, b, ConvGeometry{}), 2); };
  CHECK(MaxGradientError(rng, x, f) < kOpTolerance);
  CHECK(MaxGradientError(rng, w, f) < kOpTolerance);
}

TEST_CASE("gradient check: conv2d_transpose") {
  std::mt19937_64 rng(42);
  Tensor<double> x = RandomTensor<double>(rng, {2, 3, 5, 6});
  Tensor<double> w = RandomTensor<double>(rng, {3, 2, 4, 4});
  Tensor<double> b = RandomTensor<double>(rng, {2});
  auto f = [&](Tape<double>* t) { return Probe(t, Conv2dTranspose(t, x, w, b, 2, 1), 3); };
  CHECK(MaxGradientError(rng, x, f) < kOpTolerance);
  CHECK(MaxGradientError(rng, w, f) < kOpTolerance);
  CHECK(MaxGradientError(rng, b, f) < kOpTolerance);
}

TEST_CASE("gradient check: prelu") {
  std::mt19937_64 rng(43);
  Tensor<double> x = RandomTensor<double>(rng, {2, 3, 4, 4});
  Tensor<double> a = RandomTensor<double>(rng, {3}, 0.05, 0.5);
  auto f = [&](Tape<double>* t) { return Probe(t, PRelu(t, x, a), 4); };
  CHECK(MaxGradientError(rng, x, f) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, f) < kOpTolerance);
}

TEST_CASE("gradient check: elementwise and reductions") {
  std::mt19937_64 rng(44);
  Tensor<double> a = RandomTensor<double>(rng, {2, 2, 4, 4});
  Tensor<double> b = RandomTensor<double>(rng, {2, 2, 4, 4});
  Tensor<double> c = RandomTensor<double>(rng, {2, 1, 4, 4});
  Tensor<double> s = RandomTensor<double>(rng, {1});
  auto add = [&](Tape<double>* t) { return Probe(t, Add(t, a, b), 5); };
  auto sub = [&](Tape<double>* t) { return Probe(t, Sub(t, a, b), 6); };
  auto scale = [&](Tape<double>* t) { return Probe(t, Scale(t, a, s), 7); };
  auto affine = [&](Tape<double>* t) { return Probe(t, Affine(t, a, -2.5, 3.0), 8); };
  auto concat = [&](Tape<double>* t) { return Probe(t, ConcatChannels(t, a, c), 9); };
  auto mse = [&](Tape<double>* t) { return Mse(t, a, b); };
  auto pool2 = [&](Tape<double>* t) { return Probe(t, AvgPool(t, a, 2), 10); };
  auto pool4 = [&](Tape<double>* t) { return Probe(t, AvgPool(t, a, 4), 11); };
  CHECK(MaxGradientError(rng, a, add) < kOpTolerance);
  CHECK(MaxGradientError(rng, b, add) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, sub) < kOpTolerance);
  CHECK(MaxGradientError(rng, b, sub) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, scale) < kOpTolerance);
  CHECK(MaxGradientError(rng, s, scale) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, affine) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, concat) < kOpTolerance);
  CHECK(MaxGradientError(rng, c, concat) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, mse) < kOpTolerance);
  CHECK(MaxGradientError(rng, b, mse) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, pool2) < kOpTolerance);
  CHECK(MaxGradientError(rng, a, pool4) < kOpTolerance);
}

TEST_CASE("mse gradient is 2(a - b)/N") {
  std::mt19937_64 rng(45);
  Tensor<double> a = RandomTensor<double>(rng, {3, 5});
  const Tensor<double> b = RandomTensor<double>(rng, {3, 5}, -1, 1, false);
  Tape<double> tape;
  const auto g = tape.Backward(Mse(&tape, a, b)).Get(a);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i] == doctest::Approx(2.0 * (a.data()[i] - b.data()[i]) / 15.0).epsilon(1e-14));
  }
}

TEST_CASE("gradient check: box_clamp and block transforms") {
  std::mt19937_64 rng(46);
  Tensor<double> x = RandomTensor<double>(rng, {1, 64, 2, 2}, -3, 3);
  const Tensor<double> lo = RandomTensor<double>(rng, {1, 64, 2, 2}, -2, 0, false);
  const Tensor<double> hi = RandomTensor<double>(rng, {1, 64, 2, 2}, 0, 2, false);
  auto clamp = [&](Tape<double>* t) { return Probe(t, BoxClamp(t, x, lo, hi), 12); };
  CHECK(MaxGradientError(rng, x, clamp, 40) < kOpTolerance);
  // Outside the box the gradient is exactly zero.
  Tape<double> tape;
  const auto g = tape.Backward(Probe(&tape, BoxClamp(&tape, x, lo, hi), 12)).Get(x);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (x.data()[i] < lo.data()[i] || x.data()[i] > hi.data()[i]) CHECK(g[i] == 0.0);
  }

  Tensor<double> img = RandomTensor<double>(rng, {2, 1, 16, 8});
  auto dct = [&](Tape<double>* t) { return Probe(t, BlockDctLayer(t, img), 13); };
  CHECK(MaxGradientError(rng, img, dct) < kOpTolerance);
  auto idct = [&](Tape<double>* t) { return Probe(t, BlockIdctLayer(t, x), 14); };
  CHECK(MaxGradientError(rng, x, idct) < kOpTolerance);
}

TEST_CASE("gradient check: weighted_sum") {
  std::mt19937_64 rng(47);
  Tensor<double> a = RandomTensor<double>(rng, {4, 3});
  auto f = [&](Tape<double>* t) { return Probe(t, a, 15); };
  CHECK(MaxGradientError(rng, a, f) < kOpTolerance);
}

}  // namespace
}  // namespace dualres
