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

#ifndef QRC_OPS_H_
#define QRC_OPS_H_

// Differentiable primitives. Each records itself on the active tape when
// any input requires a gradient; otherwise it is a plain computation.

#include <span>
#include <vector>

#include "qrc/random.h"
#include "qrc/tensor.h"

namespace qrc {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
};

struct ConvTranspose2dOptions {
  int stride = 1;
  int padding = 0;
  int output_padding = 0;
};

// x: N x Ci x H x W, weight: Co x Ci x kh x kw, bias: Co (may be undefined).
Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

// x: N x Ci x H x W, weight: Ci x Co x kh x kw, bias: Co (may be undefined).
// Output extent is (H - 1) * stride - 2 * padding + kh + output_padding.
Tensor ConvTranspose2d(const Tensor& x, const Tensor& weight,
                       const Tensor& bias, ConvTranspose2dOptions options = {});

// a: [..., M, K]; b: [K, N] (shared across the batch) or [..., K, N].
Tensor MatMul(const Tensor& a, const Tensor& b);

// Elementwise binary ops. `b` either matches `a` or its shape is a trailing
// suffix of `a`'s shape, in which case it is broadcast over leading axes.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);

Tensor Scale(const Tensor& x, Real factor);
Tensor AddScalar(const Tensor& x, Real value);

Tensor LeakyRelu(const Tensor& x, Real slope = 0.01);
Tensor Sigmoid(const Tensor& x);
Tensor Exp(const Tensor& x);
Tensor Log(const Tensor& x);
Tensor Square(const Tensor& x);
Tensor Abs(const Tensor& x);
// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
Tensor SmoothL1(const Tensor& x);
// x^p for x >= 0.
Tensor Pow(const Tensor& x, Real exponent);
// max(x, floor); gradient is zero where the floor is active.
Tensor ClampMin(const Tensor& x, Real floor);

// Reductions to a rank-0 tensor.
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
// Reduction over the last axis only.
Tensor SumLastAxis(const Tensor& x);
Tensor MeanLastAxis(const Tensor& x);
// Euclidean norm of all elements. The gradient at zero is taken as zero.
Tensor L2Norm(const Tensor& x);

Tensor Reshape(const Tensor& x, Shape shape);
Tensor Permute(const Tensor& x, std::span<const int> order);

// Concatenation / slicing along axis 1 of N x C x ... tensors.
Tensor ConcatChannels(std::span<const Tensor> parts);
Tensor SliceChannels(const Tensor& x, int64_t begin, int64_t count);

// Normalizes over the last axis; gamma/beta (shape [last]) may be undefined.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Real epsilon = 1e-5);
Tensor Softmax(const Tensor& x);

// x + u with u ~ U(-0.5, 0.5), drawn in element order. Gradient passes
// straight through to x.
Tensor AddUniformNoise(const Tensor& x, Rng& rng);

// Round half away from zero. Never differentiated: rejected when x is
// tracked by the active tape.
Tensor Round(const Tensor& x);

// Probability mass of the unit bin around each value under a per-channel
// logistic distribution: F(v + 0.5) - F(v - 0.5) with
// F(t) = sigmoid((t - loc[c]) / exp(log_scale[c])). Channel axis is 1.
Tensor LogisticBinMass(const Tensor& values, const Tensor& loc,
                       const Tensor& log_scale);

// Scalar helpers shared with non-differentiable code.
Real StableSigmoid(Real x);
Real RoundHalfAwayFromZero(Real x);
// sigmoid(upper) - sigmoid(lower) without cancellation in the tails.
Real LogisticIntervalMass(Real lower, Real upper);

}  // namespace qrc

#endif  // QRC_OPS_H_
