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

#ifndef QRC_LAYERS_H_
#define QRC_LAYERS_H_

#include <string>
#include <vector>

#include "qrc/ops.h"
#include "qrc/random.h"
#include "qrc/tensor.h"

namespace qrc {

struct NamedParameter {
  std::string name;
  // Shares storage with the owning layer.
  Tensor tensor;
};

using ParameterList = std::vector<NamedParameter>;

// Trainable leaf with entries uniform in +-1/sqrt(fan_in).
Tensor UniformParameter(Shape shape, int64_t fan_in, Rng& rng);
Tensor ConstantParameter(Shape shape, Real value);

// Slope used by every leaky-relu in the codec and rectifier.
inline constexpr Real kLeakySlope = 0.01;

class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(int in_channels, int out_channels, int kernel, int stride,
              int padding, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;
  // Sets weight and bias to zero.
  void ZeroInit();

  int in_channels() const { return static_cast<int>(weight_.dim(1)); }
  int out_channels() const { return static_cast<int>(weight_.dim(0)); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  Conv2dOptions options() const { return options_; }

 private:
  Tensor weight_;
  Tensor bias_;
  Conv2dOptions options_;
};

class ConvTranspose2dLayer {
 public:
  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(int in_channels, int out_channels, int kernel,
                       int stride, int padding, int output_padding, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

 private:
  Tensor weight_;
  Tensor bias_;
  ConvTranspose2dOptions options_;
};

// y = x W + b over the last axis.
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_;  // in x out
  Tensor bias_;
};

// x + conv(leaky_relu(conv(x))) with 3x3 kernels, padding 1.
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(int channels, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

  int channels() const { return channels_; }
  const Conv2dLayer& first() const { return conv1_; }
  const Conv2dLayer& second() const { return conv2_; }

 private:
  int channels_ = 0;
  Conv2dLayer conv1_;
  Conv2dLayer conv2_;
};

// Splits the channels into `groups` slices of `group_dim`, applies an
// independent ResBlock to each and concatenates the results.
class GroupedResBlocks {
 public:
  GroupedResBlocks() = default;
  GroupedResBlocks(int groups, int group_dim, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

  int groups() const { return static_cast<int>(blocks_.size()); }
  int group_dim() const { return group_dim_; }
  int channels() const { return groups() * group_dim_; }
  const ResBlock& block(int g) const { return blocks_[g]; }

 private:
  int group_dim_ = 0;
  std::vector<ResBlock> blocks_;
};

// Layer-norm over channels followed by multi-head self-attention across the
// spatial positions of an N x C x H x W map (flattened row-major). Query,
// key and value are projected from C to heads * head_dim and the context is
// projected back to C. The residual connection is left to the caller.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(int channels, int heads, int head_dim, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  // Also returns the N x heads x L x L attention distributions.
  Tensor Forward(const Tensor& x, Tensor* attention) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

  int channels() const { return channels_; }
  int heads() const { return heads_; }
  int head_dim() const { return head_dim_; }
  const Tensor& norm_gamma() const { return norm_gamma_; }
  const Tensor& norm_beta() const { return norm_beta_; }
  const Linear& query() const { return query_; }
  const Linear& key() const { return key_; }
  const Linear& value() const { return value_; }
  const Linear& output() const { return output_; }

  static constexpr Real kNormEpsilon = 1e-5;

 private:
  int channels_ = 0;
  int heads_ = 0;
  int head_dim_ = 0;
  Tensor norm_gamma_;
  Tensor norm_beta_;
  Linear query_;
  Linear key_;
  Linear value_;
  Linear output_;
};

}  // namespace qrc

#endif  // QRC_LAYERS_H_
