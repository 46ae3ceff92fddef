// Copyright 2026 The QR Codec Authors.
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

#include "qrc/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <string>

namespace qrc {
namespace {

using MatRM =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

bool Tracked(const Tensor& t) { return t.defined() && t.requires_grad(); }

bool ShouldRecord(std::initializer_list<const Tensor*> inputs) {
  if (Tape::Active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (Tracked(*t)) return true;
  }
  return false;
}

void Record(std::string_view kind, std::initializer_list<Tensor> inputs,
            Tensor& out, Tape::BackwardFn fn) {
  Tape::Active()->Record(kind, std::span(inputs.begin(), inputs.size()), out,
                         std::move(fn));
}

std::span<Real> Grad(const Tensor& t) {
  return internal::GradBuffer(*t.impl());
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void RequireRank(const Tensor& t, int rank, const char* op, const char* name) {
  Require(t.defined() && t.rank() == rank,
          std::string(op) + ": " + name + " must have rank " +
              std::to_string(rank) + ", got " +
              (t.defined() ? ShapeToString(t.shape()) : "undefined"));
}

// Unfolds one C x H x W image into a (C*kh*kw) x (oh*ow) matrix.
void Im2Col(const Real* img, int64_t c, int64_t h, int64_t w, int64_t kh,
            int64_t kw, int stride, int pad, int64_t oh, int64_t ow,
            Real* col) {
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        Real* row = col + ((ci * kh + ki) * kw + kj) * oh * ow;
        for (int64_t y = 0; y < oh; ++y) {
          const int64_t iy = y * stride - pad + ki;
          Real* dst = row + y * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const Real* src = img + (ci * h + iy) * w;
          for (int64_t x = 0; x < ow; ++x) {
            const int64_t ix = x * stride - pad + kj;
            dst[x] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: accumulates the matrix back into the image.
void Col2Im(const Real* col, int64_t c, int64_t h, int64_t w, int64_t kh,
            int64_t kw, int stride, int pad, int64_t oh, int64_t ow,
            Real* img) {
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        const Real* row = col + ((ci * kh + ki) * kw + kj) * oh * ow;
        for (int64_t y = 0; y < oh; ++y) {
          const int64_t iy = y * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          const Real* src = row + y * ow;
          Real* dst = img + (ci * h + iy) * w;
          for (int64_t x = 0; x < ow; ++x) {
            const int64_t ix = x * stride - pad + kj;
            if (ix >= 0 && ix < w) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

template <class F, class DF>
Tensor Unary(std::string_view kind, const Tensor& x, F f, DF df) {
  Tensor out(x.shape());
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t i = 0; i < x.numel(); ++i) od[i] = f(xd[i]);
  if (ShouldRecord({&x})) {
    Tensor y = out;
    Record(kind, {x}, out, [x, y, df](std::span<const Real> g) {
      auto gx = Grad(x);
      auto xd = x.data();
      auto yd = y.data();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xd[i], yd[i]);
    });
  }
  return out;
}

// Size of the trailing block `b` repeats over, after validating the shapes.
int64_t BroadcastInner(const char* op, const Tensor& a, const Tensor& b) {
  Require(a.defined() && b.defined(), std::string(op) + ": undefined operand");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sb.size() <= sa.size();
  for (size_t i = 0; ok && i < sb.size(); ++i) {
    ok = sb[sb.size() - 1 - i] == sa[sa.size() - 1 - i];
  }
  Require(ok, std::string(op) + ": cannot broadcast " + ShapeToString(sb) +
                  " onto " + ShapeToString(sa));
  return b.numel();
}

enum class BinaryKind { kAdd, kSub, kMul, kDiv };

Tensor Binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  static constexpr const char* kNames[] = {"add", "sub", "mul", "div"};
  const char* name = kNames[static_cast<int>(kind)];
  const int64_t inner = BroadcastInner(name, a, b);
  Tensor out(a.shape());
  auto ad = a.data();
  auto bd = b.data();
  auto od = out.mutable_data();
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) {
    const Real u = ad[i];
    const Real v = bd[inner == 0 ? 0 : i % inner];
    switch (kind) {
      case BinaryKind::kAdd: od[i] = u + v; break;
      case BinaryKind::kSub: od[i] = u - v; break;
      case BinaryKind::kMul: od[i] = u * v; break;
      case BinaryKind::kDiv: od[i] = u / v; break;
    }
  }
  if (ShouldRecord({&a, &b})) {
    Record(name, {a, b}, out, [kind, a, b, inner](std::span<const Real> g) {
      auto ad = a.data();
      auto bd = b.data();
      const int64_t n = static_cast<int64_t>(g.size());
      if (Tracked(a)) {
        auto ga = Grad(a);
        for (int64_t i = 0; i < n; ++i) {
          const Real v = bd[i % inner];
          switch (kind) {
            case BinaryKind::kAdd:
            case BinaryKind::kSub: ga[i] += g[i]; break;
            case BinaryKind::kMul: ga[i] += g[i] * v; break;
            case BinaryKind::kDiv: ga[i] += g[i] / v; break;
          }
        }
      }
      if (Tracked(b)) {
        auto gb = Grad(b);
        for (int64_t i = 0; i < n; ++i) {
          const int64_t j = i % inner;
          const Real u = ad[i];
          const Real v = bd[j];
          switch (kind) {
            case BinaryKind::kAdd: gb[j] += g[i]; break;
            case BinaryKind::kSub: gb[j] -= g[i]; break;
            case BinaryKind::kMul: gb[j] += g[i] * u; break;
            case BinaryKind::kDiv: gb[j] -= g[i] * u / (v * v); break;
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

Real StableSigmoid(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

Real RoundHalfAwayFromZero(Real x) { return std::round(x); }

Real LogisticIntervalMass(Real lower, Real upper) {
  // Reflect into the lower tail, where both sigmoids are small.
  if (lower + upper > 0) return StableSigmoid(-lower) - StableSigmoid(-upper);
  return StableSigmoid(upper) - StableSigmoid(lower);
}

Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions opt) {
  RequireRank(x, 4, "conv2d", "input");
  RequireRank(weight, 4, "conv2d", "kernel");
  const int64_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  Require(weight.dim(1) == ci,
          "conv2d: kernel " + ShapeToString(weight.shape()) + " expects " +
              std::to_string(weight.dim(1)) + " input channels, input " +
              ShapeToString(x.shape()) + " has " + std::to_string(ci));
  Require(opt.stride >= 1 && opt.padding >= 0, "conv2d: bad stride/padding");
  Require(!bias.defined() || (bias.rank() == 1 && bias.dim(0) == co),
          "conv2d: bias " +
              (bias.defined() ? ShapeToString(bias.shape()) : std::string()) +
              " does not match " + std::to_string(co) + " output channels");
  Require(h + 2 * opt.padding >= kh && w + 2 * opt.padding >= kw,
          "conv2d: kernel " + ShapeToString(weight.shape()) +
              " larger than padded input " + ShapeToString(x.shape()));
  const int64_t oh = (h + 2 * opt.padding - kh) / opt.stride + 1;
  const int64_t ow = (w + 2 * opt.padding - kw) / opt.stride + 1;
  const int64_t k = ci * kh * kw;
  const int64_t p = oh * ow;

  Tensor out(Shape{n, co, oh, ow});
  std::vector<Real> col(k * p);
  CMapM wmat(weight.data().data(), co, k);
  for (int64_t b = 0; b < n; ++b) {
    Im2Col(x.data().data() + b * ci * h * w, ci, h, w, kh, kw, opt.stride,
           opt.padding, oh, ow, col.data());
    MapM o(out.mutable_data().data() + b * co * p, co, p);
    o.noalias() = wmat * CMapM(col.data(), k, p);
    if (bias.defined()) {
      for (int64_t c = 0; c < co; ++c) o.row(c).array() += bias[c];
    }
  }
  if (ShouldRecord({&x, &weight, &bias})) {
    Record("conv2d", {x, weight, bias}, out,
           [=](std::span<const Real> g) {
             std::vector<Real> col(k * p);
             std::vector<Real> gcol;
             CMapM wmat(weight.data().data(), co, k);
             for (int64_t b = 0; b < n; ++b) {
               CMapM gout(g.data() + b * co * p, co, p);
               if (Tracked(weight)) {
                 Im2Col(x.data().data() + b * ci * h * w, ci, h, w, kh, kw,
                        opt.stride, opt.padding, oh, ow, col.data());
                 MapM gw(Grad(weight).data(), co, k);
                 gw.noalias() += gout * CMapM(col.data(), k, p).transpose();
               }
               if (Tracked(x)) {
                 gcol.resize(k * p);
                 MapM gc(gcol.data(), k, p);
                 gc.noalias() = wmat.transpose() * gout;
                 Col2Im(gcol.data(), ci, h, w, kh, kw, opt.stride, opt.padding,
                        oh, ow, Grad(x).data() + b * ci * h * w);
               }
               if (Tracked(bias)) {
                 auto gb = Grad(bias);
                 for (int64_t c = 0; c < co; ++c) gb[c] += gout.row(c).sum();
               }
             }
           });
  }
  return out;
}

Tensor ConvTranspose2d(const Tensor& x, const Tensor& weight,
                       const Tensor& bias, ConvTranspose2dOptions opt) {
  RequireRank(x, 4, "conv_transpose2d", "input");
  RequireRank(weight, 4, "conv_transpose2d", "kernel");
  const int64_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t co = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
  Require(weight.dim(0) == ci,
          "conv_transpose2d: kernel " + ShapeToString(weight.shape()) +
              " expects " + std::to_string(weight.dim(0)) +
              " input channels, input " + ShapeToString(x.shape()) + " has " +
              std::to_string(ci));
  Require(opt.stride >= 1 && opt.padding >= 0 && opt.output_padding >= 0 &&
              opt.output_padding < opt.stride,
          "conv_transpose2d: bad stride/padding/output_padding");
  Require(!bias.defined() || (bias.rank() == 1 && bias.dim(0) == co),
          "conv_transpose2d: bias does not match " + std::to_string(co) +
              " output channels");
  const int64_t oh = (h - 1) * opt.stride - 2 * opt.padding + kh + opt.output_padding;
  const int64_t ow = (w - 1) * opt.stride - 2 * opt.padding + kw + opt.output_padding;
  Require(oh > 0 && ow > 0, "conv_transpose2d: empty output for input " +
                                ShapeToString(x.shape()));
  const int64_t k = co * kh * kw;
  const int64_t p = h * w;

  Tensor out(Shape{n, co, oh, ow});
  std::vector<Real> col(k * p);
  CMapM wmat(weight.data().data(), ci, k);
  for (int64_t b = 0; b < n; ++b) {
    MapM c(col.data(), k, p);
    c.noalias() = wmat.transpose() * CMapM(x.data().data() + b * ci * p, ci, p);
    Real* o = out.mutable_data().data() + b * co * oh * ow;
    Col2Im(col.data(), co, oh, ow, kh, kw, opt.stride, opt.padding, h, w, o);
    if (bias.defined()) {
      for (int64_t c2 = 0; c2 < co; ++c2) {
        std::for_each(o + c2 * oh * ow, o + (c2 + 1) * oh * ow,
                      [&](Real& v) { v += bias[c2]; });
      }
    }
  }
  if (ShouldRecord({&x, &weight, &bias})) {
    Record("conv_transpose2d", {x, weight, bias}, out,
           [=](std::span<const Real> g) {
             std::vector<Real> gcol(k * p);
             CMapM wmat(weight.data().data(), ci, k);
             for (int64_t b = 0; b < n; ++b) {
               const Real* gb_img = g.data() + b * co * oh * ow;
               if (Tracked(x) || Tracked(weight)) {
                 Im2Col(gb_img, co, oh, ow, kh, kw, opt.stride, opt.padding, h,
                        w, gcol.data());
                 CMapM gc(gcol.data(), k, p);
                 if (Tracked(x)) {
                   MapM gx(Grad(x).data() + b * ci * p, ci, p);
                   gx.noalias() += wmat * gc;
                 }
                 if (Tracked(weight)) {
                   MapM gw(Grad(weight).data(), ci, k);
                   gw.noalias() +=
                       CMapM(x.data().data() + b * ci * p, ci, p) * gc.transpose();
                 }
               }
               if (Tracked(bias)) {
                 auto gbias = Grad(bias);
                 for (int64_t c2 = 0; c2 < co; ++c2) {
                   gbias[c2] += std::accumulate(gb_img + c2 * oh * ow,
                                                gb_img + (c2 + 1) * oh * ow, 0.0);
                 }
               }
             }
           });
  }
  return out;
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  Require(a.defined() && b.defined() && a.rank() >= 2 && b.rank() >= 2,
          "matmul: operands must have rank >= 2");
  const int64_t m = a.dim(-2), k = a.dim(-1);
  Require(b.dim(-2) == k, "matmul: inner extents differ: " +
                              ShapeToString(a.shape()) + " x " +
                              ShapeToString(b.shape()));
  const int64_t ncol = b.dim(-1);
  const bool shared = b.rank() == 2;
  if (!shared) {
    Require(b.rank() == a.rank() &&
                std::equal(a.shape().begin(), a.shape().end() - 2,
                           b.shape().begin()),
            "matmul: batch extents differ: " + ShapeToString(a.shape()) +
                " x " + ShapeToString(b.shape()));
  }
  const int64_t batch = a.numel() / (m * k);
  Shape out_shape = a.shape();
  out_shape.back() = ncol;
  Tensor out(out_shape);
  if (shared) {
    MapM(out.mutable_data().data(), batch * m, ncol).noalias() =
        CMapM(a.data().data(), batch * m, k) * CMapM(b.data().data(), k, ncol);
  } else {
    for (int64_t i = 0; i < batch; ++i) {
      MapM(out.mutable_data().data() + i * m * ncol, m, ncol).noalias() =
          CMapM(a.data().data() + i * m * k, m, k) *
          CMapM(b.data().data() + i * k * ncol, k, ncol);
    }
  }
  if (ShouldRecord({&a, &b})) {
    Record("matmul", {a, b}, out, [=](std::span<const Real> g) {
      if (shared) {
        CMapM gm(g.data(), batch * m, ncol);
        if (Tracked(a)) {
          MapM(Grad(a).data(), batch * m, k).noalias() +=
              gm * CMapM(b.data().data(), k, ncol).transpose();
        }
        if (Tracked(b)) {
          MapM(Grad(b).data(), k, ncol).noalias() +=
              CMapM(a.data().data(), batch * m, k).transpose() * gm;
        }
        return;
      }
      for (int64_t i = 0; i < batch; ++i) {
        CMapM gm(g.data() + i * m * ncol, m, ncol);
        if (Tracked(a)) {
          MapM(Grad(a).data() + i * m * k, m, k).noalias() +=
              gm * CMapM(b.data().data() + i * k * ncol, k, ncol).transpose();
        }
        if (Tracked(b)) {
          MapM(Grad(b).data() + i * k * ncol, k, ncol).noalias() +=
              CMapM(a.data().data() + i * m * k, m, k).transpose() * gm;
        }
      }
    });
  }
  return out;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  return Binary(BinaryKind::kAdd, a, b);
}
Tensor Sub(const Tensor& a, const Tensor& b) {
  return Binary(BinaryKind::kSub, a, b);
}
Tensor Mul(const Tensor& a, const Tensor& b) {
  return Binary(BinaryKind::kMul, a, b);
}
Tensor Div(const Tensor& a, const Tensor& b) {
  return Binary(BinaryKind::kDiv, a, b);
}

Tensor Scale(const Tensor& x, Real factor) {
  return Unary(
      "scalar_mul", x, [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

Tensor AddScalar(const Tensor& x, Real value) {
  return Unary(
      "add_scalar", x, [value](Real v) { return v + value; },
      [](Real, Real) { return 1.0; });
}

Tensor LeakyRelu(const Tensor& x, Real slope) {
  return Unary(
      "leaky_relu", x, [slope](Real v) { return v > 0 ? v : slope * v; },
      [slope](Real v, Real) { return v > 0 ? 1.0 : slope; });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(
      "sigmoid", x, [](Real v) { return StableSigmoid(v); },
      [](Real, Real y) { return y * (1.0 - y); });
}

Tensor Exp(const Tensor& x) {
  return Unary(
      "exp", x, [](Real v) { return std::exp(v); },
      [](Real, Real y) { return y; });
}

Tensor Log(const Tensor& x) {
  return Unary(
      "log", x, [](Real v) { return std::log(v); },
      [](Real v, Real) { return 1.0 / v; });
}

Tensor Square(const Tensor& x) {
  return Unary(
      "square", x, [](Real v) { return v * v; },
      [](Real v, Real) { return 2.0 * v; });
}

Tensor Abs(const Tensor& x) {
  return Unary(
      "abs", x, [](Real v) { return std::abs(v); },
      [](Real v, Real) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor SmoothL1(const Tensor& x) {
  return Unary(
      "smooth_l1", x,
      [](Real v) {
        const Real a = std::abs(v);
        return a < 1.0 ? 0.5 * v * v : a - 0.5;
      },
      [](Real v, Real) {
        if (std::abs(v) < 1.0) return v;
        return v > 0 ? 1.0 : -1.0;
      });
}

Tensor Pow(const Tensor& x, Real exponent) {
  return Unary(
      "pow", x, [exponent](Real v) { return std::pow(v, exponent); },
      [exponent](Real v, Real) {
        return exponent * std::pow(v, exponent - 1.0);
      });
}

Tensor ClampMin(const Tensor& x, Real floor) {
  return Unary(
      "clamp_min", x, [floor](Real v) { return v < floor ? floor : v; },
      [floor](Real v, Real) { return v < floor ? 0.0 : 1.0; });
}

Tensor Sum(const Tensor& x) {
  auto xd = x.data();
  Tensor out = Tensor::Scalar(std::accumulate(xd.begin(), xd.end(), 0.0));
  if (ShouldRecord({&x})) {
    Record("sum", {x}, out, [x](std::span<const Real> g) {
      for (Real& v : Grad(x)) v += g[0];
    });
  }
  return out;
}

Tensor Mean(const Tensor& x) {
  Require(x.numel() > 0, "mean: empty tensor");
  auto xd = x.data();
  const Real inv = 1.0 / static_cast<Real>(x.numel());
  Tensor out = Tensor::Scalar(std::accumulate(xd.begin(), xd.end(), 0.0) * inv);
  if (ShouldRecord({&x})) {
    Record("mean", {x}, out, [x, inv](std::span<const Real> g) {
      for (Real& v : Grad(x)) v += g[0] * inv;
    });
  }
  return out;
}

namespace {

Tensor ReduceLastAxis(const Tensor& x, bool mean) {
  Require(x.defined() && x.rank() >= 1, "reduce: rank must be >= 1");
  const int64_t inner = x.dim(-1);
  Require(inner > 0, "reduce: empty last axis");
  const int64_t outer = x.numel() / inner;
  Shape s(x.shape().begin(), x.shape().end() - 1);
  Tensor out(s);
  const Real factor = mean ? 1.0 / static_cast<Real>(inner) : 1.0;
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t i = 0; i < outer; ++i) {
    Real acc = 0;
    for (int64_t j = 0; j < inner; ++j) acc += xd[i * inner + j];
    od[i] = acc * factor;
  }
  if (ShouldRecord({&x})) {
    Record(mean ? "mean_last" : "sum_last", {x}, out,
           [x, inner, outer, factor](std::span<const Real> g) {
             auto gx = Grad(x);
             for (int64_t i = 0; i < outer; ++i) {
               for (int64_t j = 0; j < inner; ++j) {
                 gx[i * inner + j] += g[i] * factor;
               }
             }
           });
  }
  return out;
}

}  // namespace

Tensor SumLastAxis(const Tensor& x) { return ReduceLastAxis(x, false); }
Tensor MeanLastAxis(const Tensor& x) { return ReduceLastAxis(x, true); }

Tensor L2Norm(const Tensor& x) {
  auto xd = x.data();
  Real ss = 0;
  for (Real v : xd) ss += v * v;
  const Real norm = std::sqrt(ss);
  Tensor out = Tensor::Scalar(norm);
  if (ShouldRecord({&x})) {
    Record("l2_norm", {x}, out, [x, norm](std::span<const Real> g) {
      if (norm == 0) return;
      auto gx = Grad(x);
      auto xd = x.data();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * xd[i] / norm;
    });
  }
  return out;
}

Tensor Reshape(const Tensor& x, Shape shape) {
  Require(NumElements(shape) == x.numel(),
          "reshape: cannot view " + ShapeToString(x.shape()) + " as " +
              ShapeToString(shape));
  Tensor out(std::move(shape), std::vector<Real>(x.data().begin(), x.data().end()));
  if (ShouldRecord({&x})) {
    Record("reshape", {x}, out, [x](std::span<const Real> g) {
      auto gx = Grad(x);
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor Permute(const Tensor& x, std::span<const int> order) {
  const int r = x.rank();
  Require(static_cast<int>(order.size()) == r,
          "permute: order length does not match rank of " +
              ShapeToString(x.shape()));
  std::vector<bool> seen(r, false);
  for (int a : order) {
    Require(a >= 0 && a < r && !seen[a], "permute: invalid axis order");
    seen[a] = true;
  }
  Shape out_shape(r);
  std::vector<int64_t> in_strides(r, 1);
  for (int i = r - 2; i >= 0; --i) {
    in_strides[i] = in_strides[i + 1] * x.shape()[i + 1];
  }
  // Stride in the input for each output axis.
  std::vector<int64_t> strides(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[order[i]];
    strides[i] = in_strides[order[i]];
  }
  const int64_t n = x.numel();
  // source index of each output element
  auto index = std::make_shared<std::vector<int64_t>>(n);
  std::vector<int64_t> counter(r, 0);
  int64_t src = 0;
  for (int64_t i = 0; i < n; ++i) {
    (*index)[i] = src;
    for (int a = r - 1; a >= 0; --a) {
      ++counter[a];
      src += strides[a];
      if (counter[a] < out_shape[a]) break;
      src -= strides[a] * counter[a];
      counter[a] = 0;
    }
  }
  Tensor out(out_shape);
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t i = 0; i < n; ++i) od[i] = xd[(*index)[i]];
  if (ShouldRecord({&x})) {
    Record("transpose", {x}, out, [x, index](std::span<const Real> g) {
      auto gx = Grad(x);
      for (size_t i = 0; i < g.size(); ++i) gx[(*index)[i]] += g[i];
    });
  }
  return out;
}

Tensor ConcatChannels(std::span<const Tensor> parts) {
  Require(!parts.empty(), "concat: no inputs");
  const Tensor& first = parts.front();
  Require(first.defined() && first.rank() >= 2, "concat: rank must be >= 2");
  const int64_t n = first.dim(0);
  const int64_t inner = first.numel() / (n * first.dim(1));
  int64_t total_c = 0;
  for (const Tensor& t : parts) {
    bool ok = t.defined() && t.rank() == first.rank() && t.dim(0) == n;
    for (int a = 2; ok && a < first.rank(); ++a) ok = t.dim(a) == first.dim(a);
    Require(ok, "concat: " + ShapeToString(t.shape()) +
                    " incompatible with " + ShapeToString(first.shape()));
    total_c += t.dim(1);
  }
  Shape s = first.shape();
  s[1] = total_c;
  Tensor out(s);
  auto od = out.mutable_data();
  int64_t offset = 0;
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  bool record = false;
  for (const Tensor& t : parts) {
    const int64_t c = t.dim(1);
    auto td = t.data();
    for (int64_t b = 0; b < n; ++b) {
      std::copy(td.begin() + b * c * inner, td.begin() + (b + 1) * c * inner,
                od.begin() + (b * total_c + offset) * inner);
    }
    offset += c;
    record = record || Tracked(t);
  }
  if (record && Tape::Active() != nullptr) {
    Tape::Active()->Record(
        "concat", inputs, out,
        [inputs, n, inner, total_c](std::span<const Real> g) {
          int64_t offset = 0;
          for (const Tensor& t : inputs) {
            const int64_t c = t.dim(1);
            if (Tracked(t)) {
              auto gt = Grad(t);
              for (int64_t b = 0; b < n; ++b) {
                for (int64_t i = 0; i < c * inner; ++i) {
                  gt[b * c * inner + i] += g[(b * total_c + offset) * inner + i];
                }
              }
            }
            offset += c;
          }
        });
  }
  return out;
}

Tensor SliceChannels(const Tensor& x, int64_t begin, int64_t count) {
  Require(x.defined() && x.rank() >= 2, "slice: rank must be >= 2");
  const int64_t n = x.dim(0), c = x.dim(1);
  Require(begin >= 0 && count > 0 && begin + count <= c,
          "slice: channels [" + std::to_string(begin) + ", " +
              std::to_string(begin + count) + ") outside " +
              ShapeToString(x.shape()));
  const int64_t inner = x.numel() / (n * c);
  Shape s = x.shape();
  s[1] = count;
  Tensor out(s);
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t b = 0; b < n; ++b) {
    std::copy(xd.begin() + (b * c + begin) * inner,
              xd.begin() + (b * c + begin + count) * inner,
              od.begin() + b * count * inner);
  }
  if (ShouldRecord({&x})) {
    Record("slice", {x}, out,
           [x, n, c, begin, count, inner](std::span<const Real> g) {
             auto gx = Grad(x);
             for (int64_t b = 0; b < n; ++b) {
               for (int64_t i = 0; i < count * inner; ++i) {
                 gx[(b * c + begin) * inner + i] += g[b * count * inner + i];
               }
             }
           });
  }
  return out;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Real epsilon) {
  Require(x.defined() && x.rank() >= 1, "layer_norm: rank must be >= 1");
  const int64_t d = x.dim(-1);
  const int64_t rows = x.numel() / d;
  Require(!gamma.defined() || gamma.numel() == d,
          "layer_norm: gamma does not match last extent " + std::to_string(d));
  Require(!beta.defined() || beta.numel() == d,
          "layer_norm: beta does not match last extent " + std::to_string(d));
  Tensor out(x.shape());
  auto xhat = std::make_shared<std::vector<Real>>(x.numel());
  auto inv_std = std::make_shared<std::vector<Real>>(rows);
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t r = 0; r < rows; ++r) {
    const Real* row = xd.data() + r * d;
    Real mean = 0;
    for (int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (int64_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<Real>(d);
    const Real is = 1.0 / std::sqrt(var + epsilon);
    (*inv_std)[r] = is;
    for (int64_t j = 0; j < d; ++j) {
      const Real v = (row[j] - mean) * is;
      (*xhat)[r * d + j] = v;
      const Real gmul = gamma.defined() ? gamma[j] : 1.0;
      const Real badd = beta.defined() ? beta[j] : 0.0;
      od[r * d + j] = v * gmul + badd;
    }
  }
  if (ShouldRecord({&x, &gamma, &beta})) {
    Record("layer_norm", {x, gamma, beta}, out,
           [=](std::span<const Real> g) {
             std::vector<Real> dxhat(d);
             for (int64_t r = 0; r < rows; ++r) {
               const Real* xh = xhat->data() + r * d;
               const Real* gr = g.data() + r * d;
               if (Tracked(gamma)) {
                 auto gg = Grad(gamma);
                 for (int64_t j = 0; j < d; ++j) gg[j] += gr[j] * xh[j];
               }
               if (Tracked(beta)) {
                 auto gb = Grad(beta);
                 for (int64_t j = 0; j < d; ++j) gb[j] += gr[j];
               }
               if (!Tracked(x)) continue;
               Real mean_d = 0, mean_dx = 0;
               for (int64_t j = 0; j < d; ++j) {
                 dxhat[j] = gr[j] * (gamma.defined() ? gamma[j] : 1.0);
                 mean_d += dxhat[j];
                 mean_dx += dxhat[j] * xh[j];
               }
               mean_d /= static_cast<Real>(d);
               mean_dx /= static_cast<Real>(d);
               auto gx = Grad(x);
               const Real is = (*inv_std)[r];
               for (int64_t j = 0; j < d; ++j) {
                 gx[r * d + j] += is * (dxhat[j] - mean_d - xh[j] * mean_dx);
               }
             }
           });
  }
  return out;
}

Tensor Softmax(const Tensor& x) {
  Require(x.defined() && x.rank() >= 1, "softmax: rank must be >= 1");
  const int64_t d = x.dim(-1);
  const int64_t rows = x.numel() / d;
  Tensor out(x.shape());
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t r = 0; r < rows; ++r) {
    const Real* row = xd.data() + r * d;
    Real* o = od.data() + r * d;
    const Real mx = *std::max_element(row, row + d);
    Real total = 0;
    for (int64_t j = 0; j < d; ++j) {
      o[j] = std::exp(row[j] - mx);
      total += o[j];
    }
    for (int64_t j = 0; j < d; ++j) o[j] /= total;
  }
  if (ShouldRecord({&x})) {
    Tensor y = out;
    Record("softmax", {x}, out, [x, y, d, rows](std::span<const Real> g) {
      auto gx = Grad(x);
      auto yd = y.data();
      for (int64_t r = 0; r < rows; ++r) {
        Real dot = 0;
        for (int64_t j = 0; j < d; ++j) dot += g[r * d + j] * yd[r * d + j];
        for (int64_t j = 0; j < d; ++j) {
          gx[r * d + j] += yd[r * d + j] * (g[r * d + j] - dot);
        }
      }
    });
  }
  return out;
}

Tensor AddUniformNoise(const Tensor& x, Rng& rng) {
  Tensor out(x.shape());
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t i = 0; i < x.numel(); ++i) {
    od[i] = xd[i] + (rng.UniformOpen01() - 0.5);
  }
  if (ShouldRecord({&x})) {
    Record("uniform_noise", {x}, out, [x](std::span<const Real> g) {
      auto gx = Grad(x);
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor Round(const Tensor& x) {
  if (ShouldRecord({&x})) {
    throw std::logic_error(
        "round: quantization cannot be differentiated; compute the input "
        "without gradient tracking or use additive noise");
  }
  Tensor out(x.shape());
  auto xd = x.data();
  auto od = out.mutable_data();
  for (int64_t i = 0; i < x.numel(); ++i) od[i] = RoundHalfAwayFromZero(xd[i]);
  return out;
}

Tensor LogisticBinMass(const Tensor& values, const Tensor& loc,
                       const Tensor& log_scale) {
  Require(values.defined() && values.rank() >= 2,
          "logistic_bin_mass: values must have rank >= 2");
  const int64_t c = values.dim(1);
  Require(loc.defined() && loc.numel() == c && log_scale.defined() &&
              log_scale.numel() == c,
          "logistic_bin_mass: " + std::to_string(c) +
              " channels but parameters " + ShapeToString(loc.shape()) + ", " +
              ShapeToString(log_scale.shape()));
  const int64_t inner = values.numel() / (values.dim(0) * c);
  Tensor out(values.shape());
  auto vd = values.data();
  auto od = out.mutable_data();
  for (int64_t i = 0; i < values.numel(); ++i) {
    const int64_t ch = (i / inner) % c;
    const Real inv = std::exp(-log_scale[ch]);
    const Real centered = vd[i] - loc[ch];
    od[i] = LogisticIntervalMass((centered - 0.5) * inv, (centered + 0.5) * inv);
  }
  if (ShouldRecord({&values, &loc, &log_scale})) {
    Record("logistic_bin_mass", {values, loc, log_scale}, out,
           [values, loc, log_scale, c, inner](std::span<const Real> g) {
             auto vd = values.data();
             auto density = [](Real t) {
               const Real s = StableSigmoid(t);
               return s * (1.0 - s);
             };
             for (size_t i = 0; i < g.size(); ++i) {
               const int64_t ch = (static_cast<int64_t>(i) / inner) % c;
               const Real inv = std::exp(-log_scale[ch]);
               const Real centered = vd[i] - loc[ch];
               const Real up = (centered + 0.5) * inv;
               const Real lo = (centered - 0.5) * inv;
               const Real du = density(up), dl = density(lo);
               const Real dv = (du - dl) * inv;
               if (Tracked(values)) Grad(values)[i] += g[i] * dv;
               if (Tracked(loc)) Grad(loc)[ch] -= g[i] * dv;
               if (Tracked(log_scale)) {
                 Grad(log_scale)[ch] -= g[i] * (du * up - dl * lo);
               }
             }
           });
  }
  return out;
}

}  // namespace qrc
