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

#include "qrc/layers.h"

#include <array>
#include <cmath>

namespace qrc {

Tensor UniformParameter(Shape shape, int64_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(fan_in));
  for (Real& v : t.mutable_data()) v = rng.Uniform(-bound, bound);
  t.set_requires_grad(true);
  return t;
}

Tensor ConstantParameter(Shape shape, Real value) {
  Tensor t = Tensor::Full(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

Conv2dLayer::Conv2dLayer(int in_channels, int out_channels, int kernel,
                         int stride, int padding, Rng& rng)
    : options_{stride, padding} {
  const int64_t fan_in = int64_t{in_channels} * kernel * kernel;
  weight_ = UniformParameter({out_channels, in_channels, kernel, kernel},
                             fan_in, rng);
  bias_ = UniformParameter({out_channels}, fan_in, rng);
}

Tensor Conv2dLayer::Forward(const Tensor& x) const {
  return Conv2d(x, weight_, bias_, options_);
}

void Conv2dLayer::CollectParameters(const std::string& prefix,
                                    ParameterList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

void Conv2dLayer::ZeroInit() {
  for (Real& v : weight_.mutable_data()) v = 0;
  for (Real& v : bias_.mutable_data()) v = 0;
}

ConvTranspose2dLayer::ConvTranspose2dLayer(int in_channels, int out_channels,
                                           int kernel, int stride, int padding,
                                           int output_padding, Rng& rng)
    : options_{stride, padding, output_padding} {
  // Each output pixel sees roughly in * (kernel / stride)^2 inputs.
  const int64_t taps = std::max(1, kernel / stride);
  const int64_t fan_in = int64_t{in_channels} * taps * taps;
  weight_ = UniformParameter({in_channels, out_channels, kernel, kernel},
                             fan_in, rng);
  bias_ = UniformParameter({out_channels}, fan_in, rng);
}

Tensor ConvTranspose2dLayer::Forward(const Tensor& x) const {
  return ConvTranspose2d(x, weight_, bias_, options_);
}

void ConvTranspose2dLayer::CollectParameters(const std::string& prefix,
                                             ParameterList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Linear::Linear(int in_features, int out_features, Rng& rng) {
  weight_ = UniformParameter({in_features, out_features}, in_features, rng);
  bias_ = UniformParameter({out_features}, in_features, rng);
}

Tensor Linear::Forward(const Tensor& x) const {
  return Add(MatMul(x, weight_), bias_);
}

void Linear::CollectParameters(const std::string& prefix,
                               ParameterList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

ResBlock::ResBlock(int channels, Rng& rng)
    : channels_(channels),
      conv1_(channels, channels, 3, 1, 1, rng),
      conv2_(channels, channels, 3, 1, 1, rng) {}

Tensor ResBlock::Forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != channels_) {
    throw ShapeError("res-block over " + std::to_string(channels_) +
                     " channels got input " + ShapeToString(x.shape()));
  }
  Tensor h = LeakyRelu(conv1_.Forward(x), kLeakySlope);
  return Add(x, conv2_.Forward(h));
}

void ResBlock::CollectParameters(const std::string& prefix,
                                 ParameterList& out) const {
  conv1_.CollectParameters(prefix + ".conv1", out);
  conv2_.CollectParameters(prefix + ".conv2", out);
}

GroupedResBlocks::GroupedResBlocks(int groups, int group_dim, Rng& rng)
    : group_dim_(group_dim) {
  if (groups <= 0 || group_dim <= 0) {
    throw std::invalid_argument("grouped res-blocks need positive dims");
  }
  blocks_.reserve(groups);
  for (int g = 0; g < groups; ++g) blocks_.emplace_back(group_dim, rng);
}

Tensor GroupedResBlocks::Forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != channels()) {
    throw ShapeError("grouped res-blocks over " + std::to_string(groups()) +
                     "x" + std::to_string(group_dim_) + " channels got input " +
                     ShapeToString(x.shape()));
  }
  if (groups() == 1) return blocks_[0].Forward(x);
  std::vector<Tensor> parts;
  parts.reserve(blocks_.size());
  for (int g = 0; g < groups(); ++g) {
    parts.push_back(
        blocks_[g].Forward(SliceChannels(x, int64_t{g} * group_dim_, group_dim_)));
  }
  return ConcatChannels(parts);
}

void GroupedResBlocks::CollectParameters(const std::string& prefix,
                                         ParameterList& out) const {
  for (int g = 0; g < groups(); ++g) {
    blocks_[g].CollectParameters(prefix + ".group" + std::to_string(g), out);
  }
}

MultiHeadAttention::MultiHeadAttention(int channels, int heads, int head_dim,
                                       Rng& rng)
    : channels_(channels), heads_(heads), head_dim_(head_dim) {
  if (channels <= 0 || heads <= 0 || head_dim <= 0 || channels % heads != 0) {
    throw std::invalid_argument(
        "attention: " + std::to_string(channels) + " channels cannot be split "
        "into " + std::to_string(heads) + " heads of dim " +
        std::to_string(head_dim));
  }
  norm_gamma_ = ConstantParameter({channels}, 1.0);
  norm_beta_ = ConstantParameter({channels}, 0.0);
  const int inner = heads * head_dim;
  query_ = Linear(channels, inner, rng);
  key_ = Linear(channels, inner, rng);
  value_ = Linear(channels, inner, rng);
  output_ = Linear(inner, channels, rng);
}

Tensor MultiHeadAttention::Forward(const Tensor& x) const {
  return Forward(x, nullptr);
}

Tensor MultiHeadAttention::Forward(const Tensor& x, Tensor* attention) const {
  if (x.rank() != 4 || x.dim(1) != channels_) {
    throw ShapeError("attention over " + std::to_string(channels_) +
                     " channels got input " + ShapeToString(x.shape()));
  }
  const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3), len = h * w;
  static constexpr std::array<int, 4> kToSequence = {0, 2, 3, 1};
  static constexpr std::array<int, 4> kSplitHeads = {0, 2, 1, 3};
  static constexpr std::array<int, 4> kKeyT = {0, 2, 3, 1};
  static constexpr std::array<int, 4> kToImage = {0, 3, 1, 2};

  Tensor seq = Reshape(Permute(x, kToSequence), {n, len, channels_});
  Tensor normed = LayerNorm(seq, norm_gamma_, norm_beta_, kNormEpsilon);
  const Shape split = {n, len, heads_, head_dim_};
  Tensor q = Permute(Reshape(query_.Forward(normed), split), kSplitHeads);
  Tensor kt = Permute(Reshape(key_.Forward(normed), split), kKeyT);
  Tensor v = Permute(Reshape(value_.Forward(normed), split), kSplitHeads);
  Tensor scores =
      Scale(MatMul(q, kt), 1.0 / std::sqrt(static_cast<Real>(head_dim_)));
  Tensor weights = Softmax(scores);
  if (attention != nullptr) *attention = weights;
  Tensor context = Reshape(Permute(MatMul(weights, v), kSplitHeads),
                           {n, len, int64_t{heads_} * head_dim_});
  Tensor projected = Reshape(output_.Forward(context), {n, h, w, channels_});
  return Permute(projected, kToImage);
}

void MultiHeadAttention::CollectParameters(const std::string& prefix,
                                           ParameterList& out) const {
  out.push_back({prefix + ".norm.gamma", norm_gamma_});
  out.push_back({prefix + ".norm.beta", norm_beta_});
  query_.CollectParameters(prefix + ".query", out);
  key_.CollectParameters(prefix + ".key", out);
  value_.CollectParameters(prefix + ".value", out);
  output_.CollectParameters(prefix + ".output", out);
}

}  // namespace qrc
