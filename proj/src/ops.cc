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

#include "dualres/ops.h"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#include "dualres/jpeg.h"

namespace dualres {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void CheckFinite(const std::vector<T>& v, const char* op) {
  for (T x : v) {
    if (!std::isfinite(x)) {
      throw NumericFault(std::string("non-finite value produced by ") + op);
    }
  }
}

template <typename T>
bool Recording(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor<T>* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void RequireRank(const Tensor<T>& t, int rank, const char* op, const char* what) {
  if (!t.defined() || t.rank() != rank) {
    throw ArgumentError(std::string(op) + ": " + what + " must have rank " +
                        std::to_string(rank) + ", got " +
                        (t.defined() ? ShapeString(t.shape()) : "<undefined>"));
  }
}

template <typename T>
void RequireSameShape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.defined() || !b.defined() || a.shape() != b.shape()) {
    throw ArgumentError(std::string(op) + ": shape mismatch " +
                        (a.defined() ? ShapeString(a.shape()) : "<undefined>") +
                        " vs " +
                        (b.defined() ? ShapeString(b.shape()) : "<undefined>"));
  }
}

// Unfolds x (channels, h, w) into a (channels*kh*kw) x (oh*ow) matrix whose
// rows are ordered (c, ki, kj).
template <typename T>
void Im2Col(const T* x, int channels, int h, int w, int kh, int kw,
            const ConvGeometry& g, int oh, int ow, T* cols) {
  const std::size_t p = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        T* row = cols + ((static_cast<std::size_t>(c) * kh + ki) * kw + kj) * p;
        const int x_off = kj * g.dilation - g.padding;
        for (int oy = 0; oy < oh; ++oy) {
          T* dst = row + static_cast<std::size_t>(oy) * ow;
          const int iy = oy * g.stride - g.padding + ki * g.dilation;
          if (iy < 0 || iy >= h) {
            std::fill_n(dst, ow, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * w;
          if (g.stride == 1) {
            const int lo = std::clamp(-x_off, 0, ow);
            const int hi = std::clamp(w - x_off, lo, ow);
            std::fill_n(dst, lo, T(0));
            std::copy(src + lo + x_off, src + hi + x_off, dst + lo);
            std::fill(dst + hi, dst + ow, T(0));
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * g.stride + x_off;
              dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters-and-adds cols back into x.
template <typename T>
void Col2Im(const T* cols, int channels, int h, int w, int kh, int kw,
            const ConvGeometry& g, int oh, int ow, T* x) {
  const std::size_t p = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c) {
    T* plane = x + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const T* row =
            cols + ((static_cast<std::size_t>(c) * kh + ki) * kw + kj) * p;
        const int x_off = kj * g.dilation - g.padding;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.padding + ki * g.dilation;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * ow;
          T* dst = plane + static_cast<std::size_t>(iy) * w;
          if (g.stride == 1) {
            const int lo = std::clamp(-x_off, 0, ow);
            const int hi = std::clamp(w - x_off, lo, ow);
            for (int ox = lo; ox < hi; ++ox) dst[ox + x_off] += src[ox];
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * g.stride + x_off;
              if (ix >= 0 && ix < w) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }
}

void ValidateGeometry(const ConvGeometry& g, const char* op) {
  if (g.stride < 1 || g.dilation < 1 || g.padding < 0) {
    throw ArgumentError(std::string(op) +
                        ": stride and dilation must be >= 1, padding >= 0");
  }
}

}  // namespace

int ConvOutputSize(int in, int kernel, const ConvGeometry& g) {
  const int span = g.dilation * (kernel - 1) + 1;
  const int num = in + 2 * g.padding - span;
  if (num < 0) return 0;
  return num / g.stride + 1;
}

int ConvTransposeOutputSize(int in, int kernel, int stride, int padding) {
  return (in - 1) * stride - 2 * padding + kernel;
}

template <typename T>
Tensor<T> Conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& bias, const ConvGeometry& g) {
  constexpr const char* kOp = "conv2d";
  ValidateGeometry(g, kOp);
  RequireRank(x, 4, kOp, "input");
  RequireRank(w, 4, kOp, "kernel");
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin) {
    throw ArgumentError("conv2d: input " + ShapeString(x.shape()) +
                        " does not match kernel " + ShapeString(w.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw ArgumentError("conv2d: bias " + ShapeString(bias.shape()) +
                        " does not match kernel " + ShapeString(w.shape()));
  }
  const int oh = ConvOutputSize(h, kh, g);
  const int ow = ConvOutputSize(wd, kw, g);
  if (oh <= 0 || ow <= 0) {
    throw ArgumentError("conv2d: input " + ShapeString(x.shape()) +
                        " too small for kernel " + ShapeString(w.shape()));
  }
  const int k = cin * kh * kw;
  const int p = oh * ow;
  const bool direct = kh == 1 && kw == 1 && g.stride == 1 && g.padding == 0;
  const std::size_t in_plane = static_cast<std::size_t>(cin) * h * wd;
  const std::size_t out_plane = static_cast<std::size_t>(cout) * p;

  std::vector<T> out(static_cast<std::size_t>(n) * out_plane);
  std::vector<T> cols(direct ? 0 : static_cast<std::size_t>(k) * p);
  ConstMatMap<T> wm(w.data().data(), cout, k);
  for (int i = 0; i < n; ++i) {
    const T* xi = x.data().data() + i * in_plane;
    if (!direct) Im2Col(xi, cin, h, wd, kh, kw, g, oh, ow, cols.data());
    ConstMatMap<T> src(direct ? xi : cols.data(), k, p);
    MatMap<T> y(out.data() + i * out_plane, cout, p);
    y.noalias() = wm * src;
    if (bias.defined()) {
      for (int o = 0; o < cout; ++o) y.row(o).array() += bias.data()[o];
    }
  }
  CheckFinite(out, kOp);
  const bool rec = Recording(tape, {&x, &w, &bias});
  Tensor<T> result({n, cout, oh, ow}, std::move(out), rec);
  if (rec) {
    tape->Record({x, w, bias}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   T* gx = grads[0];
                   T* gw = grads[1];
                   T* gb = grads[2];
                   std::vector<T> cols_b(direct ? 0 : static_cast<std::size_t>(k) * p);
                   std::vector<T> dcols(gx && !direct ? static_cast<std::size_t>(k) * p : 0);
                   ConstMatMap<T> wm_b(w.data().data(), cout, k);
                   for (int i = 0; i < n; ++i) {
                     ConstMatMap<T> dy(gy.data() + i * out_plane, cout, p);
                     if (gb) {
                       // Plain loop: Eigen's vectorized sum peels to the
                       // buffer's alignment, so its order would vary by address.
                       for (int o = 0; o < cout; ++o) {
                         const T* row = gy.data() + i * out_plane + static_cast<std::size_t>(o) * p;
                         T sum = T(0);
                         for (int j = 0; j < p; ++j) sum += row[j];
                         gb[o] += sum;
                       }
                     }
                     const T* xi = x.data().data() + i * in_plane;
                     if (gw) {
                       if (!direct) {
                         Im2Col(xi, cin, h, wd, kh, kw, g, oh, ow, cols_b.data());
                       }
                       ConstMatMap<T> src(direct ? xi : cols_b.data(), k, p);
                       MatMap<T> dw(gw, cout, k);
                       dw.noalias() += dy * src.transpose();
                     }
                     if (gx) {
                       if (direct) {
                         MatMap<T> dx(gx + i * in_plane, k, p);
                         dx.noalias() += wm_b.transpose() * dy;
                       } else {
                         MatMap<T> dc(dcols.data(), k, p);
                         dc.noalias() = wm_b.transpose() * dy;
                         Col2Im(dcols.data(), cin, h, wd, kh, kw, g, oh, ow,
                                gx + i * in_plane);
                       }
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Conv2dTranspose(Tape<T>* tape, const Tensor<T>& x,
                          const Tensor<T>& w, const Tensor<T>& bias, int stride,
                          int padding) {
  constexpr const char* kOp = "conv2d_transpose";
  const ConvGeometry g{stride, 1, padding};
  ValidateGeometry(g, kOp);
  RequireRank(x, 4, kOp, "input");
  RequireRank(w, 4, kOp, "kernel");
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(0) != cin) {
    throw ArgumentError("conv2d_transpose: input " + ShapeString(x.shape()) +
                        " does not match kernel " + ShapeString(w.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw ArgumentError("conv2d_transpose: bias " + ShapeString(bias.shape()) +
                        " does not match kernel " + ShapeString(w.shape()));
  }
  const int oh = ConvTransposeOutputSize(h, kh, stride, padding);
  const int ow = ConvTransposeOutputSize(wd, kw, stride, padding);
  if (oh <= 0 || ow <= 0 || ConvOutputSize(oh, kh, g) != h ||
      ConvOutputSize(ow, kw, g) != wd) {
    throw ArgumentError("conv2d_transpose: input " + ShapeString(x.shape()) +
                        " incompatible with kernel " + ShapeString(w.shape()));
  }
  const int kc = cout * kh * kw;
  const int pin = h * wd;
  const std::size_t in_plane = static_cast<std::size_t>(cin) * pin;
  const std::size_t out_plane = static_cast<std::size_t>(cout) * oh * ow;

  std::vector<T> out(static_cast<std::size_t>(n) * out_plane, T(0));
  std::vector<T> cols(static_cast<std::size_t>(kc) * pin);
  ConstMatMap<T> wm(w.data().data(), cin, kc);
  for (int i = 0; i < n; ++i) {
    ConstMatMap<T> xi(x.data().data() + i * in_plane, cin, pin);
    MatMap<T> cm(cols.data(), kc, pin);
    cm.noalias() = wm.transpose() * xi;
    T* yi = out.data() + i * out_plane;
    Col2Im(cols.data(), cout, oh, ow, kh, kw, g, h, wd, yi);
    if (bias.defined()) {
      for (int o = 0; o < cout; ++o) {
        T* plane = yi + static_cast<std::size_t>(o) * oh * ow;
        const T b = bias.data()[o];
        for (int j = 0; j < oh * ow; ++j) plane[j] += b;
      }
    }
  }
  CheckFinite(out, kOp);
  const bool rec = Recording(tape, {&x, &w, &bias});
  Tensor<T> result({n, cout, oh, ow}, std::move(out), rec);
  if (rec) {
    tape->Record({x, w, bias}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   T* gx = grads[0];
                   T* gw = grads[1];
                   T* gb = grads[2];
                   std::vector<T> dcols(static_cast<std::size_t>(kc) * pin);
                   ConstMatMap<T> wm_b(w.data().data(), cin, kc);
                   for (int i = 0; i < n; ++i) {
                     const T* dyi = gy.data() + i * out_plane;
                     if (gb) {
                       for (int o = 0; o < cout; ++o) {
                         const T* plane = dyi + static_cast<std::size_t>(o) * oh * ow;
                         T s = T(0);
                         for (int j = 0; j < oh * ow; ++j) s += plane[j];
                         gb[o] += s;
                       }
                     }
                     if (!gx && !gw) continue;
                     Im2Col(dyi, cout, oh, ow, kh, kw, g, h, wd, dcols.data());
                     ConstMatMap<T> dc(dcols.data(), kc, pin);
                     if (gx) {
                       MatMap<T> dx(gx + i * in_plane, cin, pin);
                       dx.noalias() += wm_b * dc;
                     }
                     if (gw) {
                       ConstMatMap<T> xi(x.data().data() + i * in_plane, cin, pin);
                       MatMap<T> dw(gw, cin, kc);
                       dw.noalias() += xi * dc.transpose();
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Conv2dBackwardData(const Tensor<T>& dy, const Tensor<T>& w,
                             const ConvGeometry& g, int in_h, int in_w) {
  constexpr const char* kOp = "conv2d_backward_data";
  ValidateGeometry(g, kOp);
  RequireRank(dy, 4, kOp, "output gradient");
  RequireRank(w, 4, kOp, "kernel");
  const int n = dy.dim(0), cout = dy.dim(1), oh = dy.dim(2), ow = dy.dim(3);
  const int cin = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(0) != cout || ConvOutputSize(in_h, kh, g) != oh ||
      ConvOutputSize(in_w, kw, g) != ow) {
    throw ArgumentError("conv2d_backward_data: gradient " +
                        ShapeString(dy.shape()) + " does not match kernel " +
                        ShapeString(w.shape()));
  }
  const int k = cin * kh * kw;
  const int p = oh * ow;
  std::vector<T> dx(static_cast<std::size_t>(n) * cin * in_h * in_w, T(0));
  std::vector<T> dcols(static_cast<std::size_t>(k) * p);
  ConstMatMap<T> wm(w.data().data(), cout, k);
  for (int i = 0; i < n; ++i) {
    ConstMatMap<T> dyi(dy.data().data() + static_cast<std::size_t>(i) * cout * p,
                       cout, p);
    MatMap<T> dc(dcols.data(), k, p);
    dc.noalias() = wm.transpose() * dyi;
    Col2Im(dcols.data(), cin, in_h, in_w, kh, kw, g, oh, ow,
           dx.data() + static_cast<std::size_t>(i) * cin * in_h * in_w);
  }
  return Tensor<T>({n, cin, in_h, in_w}, std::move(dx));
}

template <typename T>
Tensor<T> PRelu(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& slope) {
  if (!x.defined() || x.rank() < 2) {
    throw ArgumentError("prelu: input must have a channel dimension");
  }
  RequireRank(slope, 1, "prelu", "slope");
  const int n = x.dim(0), c = x.dim(1);
  if (slope.dim(0) != c) {
    throw ArgumentError("prelu: slope " + ShapeString(slope.shape()) +
                        " does not match input " + ShapeString(x.shape()));
  }
  const std::size_t inner = x.numel() / (static_cast<std::size_t>(n) * c);
  std::vector<T> out(x.numel());
  const T* xd = x.data().data();
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const T a = slope.data()[ch];
      const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * inner;
      for (std::size_t j = 0; j < inner; ++j) {
        const T v = xd[base + j];
        out[base + j] = v >= T(0) ? v : a * v;
      }
    }
  }
  CheckFinite(out, "prelu");
  const bool rec = Recording(tape, {&x, &slope});
  Tensor<T> result(x.shape(), std::move(out), rec);
  if (rec) {
    tape->Record({x, slope}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   T* gx = grads[0];
                   T* ga = grads[1];
                   const T* xd_b = x.data().data();
                   for (int i = 0; i < n; ++i) {
                     for (int ch = 0; ch < c; ++ch) {
                       const T a = slope.data()[ch];
                       const std::size_t base =
                           (static_cast<std::size_t>(i) * c + ch) * inner;
                       T acc = T(0);
                       for (std::size_t j = 0; j < inner; ++j) {
                         const T v = xd_b[base + j];
                         const T gj = gy[base + j];
                         if (v >= T(0)) {
                           if (gx) gx[base + j] += gj;
                         } else {
                           if (gx) gx[base + j] += a * gj;
                           acc += v * gj;
                         }
                       }
                       if (ga) ga[ch] += acc;
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  CheckFinite(out, "add");
  const bool rec = Recording(tape, {&a, &b});
  Tensor<T> result(a.shape(), std::move(out), rec);
  if (rec) {
    tape->Record({a, b}, result,
                 [](std::span<const T> gy, std::span<T* const> grads) {
                   for (int k = 0; k < 2; ++k) {
                     if (!grads[k]) continue;
                     for (std::size_t i = 0; i < gy.size(); ++i) grads[k][i] += gy[i];
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  CheckFinite(out, "sub");
  const bool rec = Recording(tape, {&a, &b});
  Tensor<T> result(a.shape(), std::move(out), rec);
  if (rec) {
    tape->Record({a, b}, result,
                 [](std::span<const T> gy, std::span<T* const> grads) {
                   if (grads[0]) {
                     for (std::size_t i = 0; i < gy.size(); ++i) grads[0][i] += gy[i];
                   }
                   if (grads[1]) {
                     for (std::size_t i = 0; i < gy.size(); ++i) grads[1][i] -= gy[i];
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Scale(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& s) {
  if (!a.defined() || !s.defined() || s.numel() != 1) {
    throw ArgumentError("scale: factor must be a one-element tensor");
  }
  const T f = s.data()[0];
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * f;
  CheckFinite(out, "scale");
  const bool rec = Recording(tape, {&a, &s});
  Tensor<T> result(a.shape(), std::move(out), rec);
  if (rec) {
    tape->Record({a, s}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   if (grads[0]) {
                     for (std::size_t i = 0; i < gy.size(); ++i) grads[0][i] += f * gy[i];
                   }
                   if (grads[1]) {
                     T acc = T(0);
                     for (std::size_t i = 0; i < gy.size(); ++i) acc += a.data()[i] * gy[i];
                     grads[1][0] += acc;
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Affine(Tape<T>* tape, const Tensor<T>& a, double mul, double add) {
  const T m = static_cast<T>(mul);
  const T c = static_cast<T>(add);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m * a.data()[i] + c;
  CheckFinite(out, "affine");
  const bool rec = Recording(tape, {&a});
  Tensor<T> result(a.shape(), std::move(out), rec);
  if (rec) {
    tape->Record({a}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   for (std::size_t i = 0; i < gy.size(); ++i) grads[0][i] += m * gy[i];
                 });
  }
  return result;
}

template <typename T>
Tensor<T> ConcatChannels(Tape<T>* tape, const Tensor<T>& a,
                         const Tensor<T>& b) {
  RequireRank(a, 4, "concat_channels", "first input");
  RequireRank(b, 4, "concat_channels", "second input");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ArgumentError("concat_channels: shape mismatch " +
                        ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const std::size_t hw = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  const std::size_t sa = ca * hw, sb = cb * hw;
  std::vector<T> out(static_cast<std::size_t>(n) * (sa + sb));
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * sa, sa, out.data() + i * (sa + sb));
    std::copy_n(b.data().data() + i * sb, sb, out.data() + i * (sa + sb) + sa);
  }
  const bool rec = Recording(tape, {&a, &b});
  Tensor<T> result({n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), rec);
  if (rec) {
    tape->Record({a, b}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   for (int i = 0; i < n; ++i) {
                     const T* src = gy.data() + i * (sa + sb);
                     if (grads[0]) {
                       for (std::size_t j = 0; j < sa; ++j) grads[0][i * sa + j] += src[j];
                     }
                     if (grads[1]) {
                       for (std::size_t j = 0; j < sb; ++j) grads[1][i * sb + j] += src[sa + j];
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> Mse(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "mse");
  const std::size_t count = a.numel();
  if (count == 0) throw ArgumentError("mse: empty tensors");
  // Accumulate in double so float32 training losses stay accurate.
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    acc += d * d;
  }
  std::vector<T> out{static_cast<T>(acc / count)};
  CheckFinite(out, "mse");
  const bool rec = Recording(tape, {&a, &b});
  Tensor<T> result(Shape{}, std::move(out), rec);
  if (rec) {
    tape->Record({a, b}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   const T k = T(2) * gy[0] / static_cast<T>(count);
                   for (std::size_t i = 0; i < count; ++i) {
                     const T d = a.data()[i] - b.data()[i];
                     if (grads[0]) grads[0][i] += k * d;
                     if (grads[1]) grads[1][i] -= k * d;
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> WeightedSum(Tape<T>* tape, const Tensor<T>& a,
                      const Tensor<T>& weights) {
  RequireSameShape(a, weights, "weighted_sum");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    acc += static_cast<double>(a.data()[i]) * weights.data()[i];
  }
  std::vector<T> out{static_cast<T>(acc)};
  CheckFinite(out, "weighted_sum");
  const bool rec = Recording(tape, {&a});
  Tensor<T> result(Shape{}, std::move(out), rec);
  if (rec) {
    tape->Record({a}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   for (std::size_t i = 0; i < weights.numel(); ++i) {
                     grads[0][i] += gy[0] * weights.data()[i];
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> AvgPool(Tape<T>* tape, const Tensor<T>& x, int factor) {
  RequireRank(x, 4, "avg_pool", "input");
  if (factor < 1 || x.dim(2) % factor != 0 || x.dim(3) % factor != 0) {
    throw ArgumentError("avg_pool: " + ShapeString(x.shape()) +
                        " not divisible by factor " + std::to_string(factor));
  }
  const int planes = x.dim(0) * x.dim(1);
  const int h = x.dim(2), w = x.dim(3);
  const int oh = h / factor, ow = w / factor;
  const T inv = T(1) / static_cast<T>(factor * factor);
  std::vector<T> out(static_cast<std::size_t>(planes) * oh * ow, T(0));
  for (int p = 0; p < planes; ++p) {
    const T* src = x.data().data() + static_cast<std::size_t>(p) * h * w;
    T* dst = out.data() + static_cast<std::size_t>(p) * oh * ow;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        dst[(y / factor) * ow + xx / factor] += src[y * w + xx];
      }
    }
    for (int j = 0; j < oh * ow; ++j) dst[j] *= inv;
  }
  CheckFinite(out, "avg_pool");
  const bool rec = Recording(tape, {&x});
  Tensor<T> result({x.dim(0), x.dim(1), oh, ow}, std::move(out), rec);
  if (rec) {
    tape->Record({x}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   for (int p = 0; p < planes; ++p) {
                     T* dst = grads[0] + static_cast<std::size_t>(p) * h * w;
                     const T* src = gy.data() + static_cast<std::size_t>(p) * oh * ow;
                     for (int y = 0; y < h; ++y) {
                       for (int xx = 0; xx < w; ++xx) {
                         dst[y * w + xx] += inv * src[(y / factor) * ow + xx / factor];
                       }
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> BoxClamp(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& lo,
                   const Tensor<T>& hi) {
  RequireSameShape(x, lo, "box_clamp");
  RequireSameShape(x, hi, "box_clamp");
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.data()[i];
    const T l = lo.data()[i], u = hi.data()[i];
    out[i] = v < l ? l : (v > u ? u : v);
  }
  CheckFinite(out, "box_clamp");
  const bool rec = Recording(tape, {&x});
  Tensor<T> result(x.shape(), std::move(out), rec);
  if (rec) {
    tape->Record({x}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   for (std::size_t i = 0; i < gy.size(); ++i) {
                     const T v = x.data()[i];
                     if (v >= lo.data()[i] && v <= hi.data()[i]) grads[0][i] += gy[i];
                   }
                 });
  }
  return result;
}

namespace {

template <typename T>
std::array<T, kBlockArea> DctMatrixAs() {
  std::array<T, kBlockArea> m{};
  const auto& d = DctMatrix();
  for (int u = 0; u < kBlock; ++u) {
    for (int x = 0; x < kBlock; ++x) m[u * kBlock + x] = static_cast<T>(d[u][x]);
  }
  return m;
}

// Pixel (N,1,8h,8w) <-> coefficient (N,64,h,w) transforms. forward=true maps
// pixels to coefficients with A B A^T; forward=false applies A^T B A.
template <typename T>
void BlockTransform(const T* src, T* dst, int n, int bh, int bw, bool to_coeffs,
                    bool accumulate) {
  static const std::array<T, kBlockArea> a = DctMatrixAs<T>();
  const int h = bh * kBlock, w = bw * kBlock;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t grid = static_cast<std::size_t>(bh) * bw;
  T in[kBlockArea], tmp[kBlockArea], out[kBlockArea];
  for (int i = 0; i < n; ++i) {
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        const std::size_t cell = static_cast<std::size_t>(by) * bw + bx;
        if (to_coeffs) {
          const T* p = src + i * plane;
          for (int y = 0; y < kBlock; ++y) {
            for (int x = 0; x < kBlock; ++x) {
              in[y * kBlock + x] = p[(by * kBlock + y) * static_cast<std::size_t>(w) + bx * kBlock + x];
            }
          }
        } else {
          const T* c = src + i * kBlockArea * grid;
          for (int k = 0; k < kBlockArea; ++k) in[k] = c[k * grid + cell];
        }
        // out = L * in * R with (L, R) = (A, A^T) forward, (A^T, A) inverse.
        for (int r = 0; r < kBlock; ++r) {
          for (int col = 0; col < kBlock; ++col) {
            T s = T(0);
            for (int k = 0; k < kBlock; ++k) {
              const T l = to_coeffs ? a[r * kBlock + k] : a[k * kBlock + r];
              s += l * in[k * kBlock + col];
            }
            tmp[r * kBlock + col] = s;
          }
        }
        for (int r = 0; r < kBlock; ++r) {
          for (int col = 0; col < kBlock; ++col) {
            T s = T(0);
            for (int k = 0; k < kBlock; ++k) {
              const T rr = to_coeffs ? a[col * kBlock + k] : a[k * kBlock + col];
              s += tmp[r * kBlock + k] * rr;
            }
            out[r * kBlock + col] = s;
          }
        }
        if (to_coeffs) {
          T* c = dst + i * kBlockArea * grid;
          for (int k = 0; k < kBlockArea; ++k) {
            if (accumulate) c[k * grid + cell] += out[k]; else c[k * grid + cell] = out[k];
          }
        } else {
          T* p = dst + i * plane;
          for (int y = 0; y < kBlock; ++y) {
            for (int x = 0; x < kBlock; ++x) {
              T& d = p[(by * kBlock + y) * static_cast<std::size_t>(w) + bx * kBlock + x];
              if (accumulate) d += out[y * kBlock + x]; else d = out[y * kBlock + x];
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> BlockDctLayer(Tape<T>* tape, const Tensor<T>& x) {
  RequireRank(x, 4, "block_dct", "input");
  if (x.dim(1) != 1 || x.dim(2) % kBlock || x.dim(3) % kBlock) {
    throw ArgumentError("block_dct: expected (N, 1, 8h, 8w), got " +
                        ShapeString(x.shape()));
  }
  const int n = x.dim(0), bh = x.dim(2) / kBlock, bw = x.dim(3) / kBlock;
  std::vector<T> out(x.numel());
  BlockTransform(x.data().data(), out.data(), n, bh, bw, true, false);
  CheckFinite(out, "block_dct");
  const bool rec = Recording(tape, {&x});
  Tensor<T> result({n, kBlockArea, bh, bw}, std::move(out), rec);
  if (rec) {
    tape->Record({x}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   BlockTransform(gy.data(), grads[0], n, bh, bw, false, true);
                 });
  }
  return result;
}

template <typename T>
Tensor<T> BlockIdctLayer(Tape<T>* tape, const Tensor<T>& x) {
  RequireRank(x, 4, "block_idct", "input");
  if (x.dim(1) != kBlockArea) {
    throw ArgumentError("block_idct: expected 64 channels, got " +
                        ShapeString(x.shape()));
  }
  const int n = x.dim(0), bh = x.dim(2), bw = x.dim(3);
  std::vector<T> out(x.numel());
  BlockTransform(x.data().data(), out.data(), n, bh, bw, false, false);
  CheckFinite(out, "block_idct");
  const bool rec = Recording(tape, {&x});
  Tensor<T> result({n, 1, bh * kBlock, bw * kBlock}, std::move(out), rec);
  if (rec) {
    tape->Record({x}, result,
                 [=](std::span<const T> gy, std::span<T* const> grads) {
                   BlockTransform(gy.data(), grads[0], n, bh, bw, true, true);
                 });
  }
  return result;
}

#define DUALRES_INSTANTIATE_OPS(T)                                              \
  template Tensor<T> Conv2d(Tape<T>*, const Tensor<T>&, const Tensor<T>&,       \
                            const Tensor<T>&, const ConvGeometry&);            \
  template Tensor<T> Conv2dTranspose(Tape<T>*, const Tensor<T>&,                \
                                     const Tensor<T>&, const Tensor<T>&, int,   \
                                     int);                                      \
  template Tensor<T> Conv2dBackwardData(const Tensor<T>&, const Tensor<T>&,     \
                                        const ConvGeometry&, int, int);         \
  template Tensor<T> PRelu(Tape<T>*, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> Add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> Sub(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> Scale(Tape<T>*, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> Affine(Tape<T>*, const Tensor<T>&, double, double);        \
  template Tensor<T> ConcatChannels(Tape<T>*, const Tensor<T>&,                 \
                                    const Tensor<T>&);                          \
  template Tensor<T> Mse(Tape<T>*, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> WeightedSum(Tape<T>*, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> AvgPool(Tape<T>*, const Tensor<T>&, int);                  \
  template Tensor<T> BoxClamp(Tape<T>*, const Tensor<T>&, const Tensor<T>&,     \
                              const Tensor<T>&);                                \
  template Tensor<T> BlockDctLayer(Tape<T>*, const Tensor<T>&);                 \
  template Tensor<T> BlockIdctLayer(Tape<T>*, const Tensor<T>&);

DUALRES_INSTANTIATE_OPS(float)
DUALRES_INSTANTIATE_OPS(double)

#undef DUALRES_INSTANTIATE_OPS

}  // namespace dualres
