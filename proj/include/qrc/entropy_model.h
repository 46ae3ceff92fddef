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

#ifndef QRC_ENTROPY_MODEL_H_
#define QRC_ENTROPY_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrc/layers.h"
#include "qrc/range_coder.h"
#include "qrc/tensor.h"

namespace qrc {

struct SymbolRange {
  int32_t lo = 0;
  int32_t hi = 0;
  friend bool operator==(const SymbolRange&, const SymbolRange&) = default;
};

// Fully factorized prior over quantized latents. Channel c follows a
// logistic law with location loc[c] and scale exp(log_scale[c]); the mass of
// integer k is F(k + 0.5) - F(k - 0.5).
class FactorizedEntropyModel {
 public:
  // Tail mass allowed outside the coded range on each side.
  static constexpr Real kTailMass = 1e-6;
  // Floor applied to likelihoods before taking logs (2^-50).
  static constexpr Real kMinLikelihood = 0x1.0p-50;
  // Scales below this cannot be turned into a coding table.
  static constexpr Real kMinScale = 1e-9;
  // Widest supported coding table.
  static constexpr int32_t kMaxTableSymbols = 8192;

  FactorizedEntropyModel() = default;
  explicit FactorizedEntropyModel(int channels);

  int channels() const { return static_cast<int>(loc_.numel()); }
  const Tensor& loc() const { return loc_; }
  const Tensor& log_scale() const { return log_scale_; }
  Tensor& loc() { return loc_; }
  Tensor& log_scale() { return log_scale_; }
  void SetChannel(int channel, Real loc, Real scale);

  Real Cdf(Real value, int channel) const;
  // F(k + 0.5) - F(k - 0.5) for any integer k.
  Real Pmf(int64_t symbol, int channel) const;
  // Mass outside [lo - 0.5, hi + 0.5] of the channel's coded range.
  Real EscapeMass(int channel) const;

  // Per-element likelihoods of an N x C x ... tensor, floored at
  // kMinLikelihood. Differentiable in the values and the parameters.
  Tensor Likelihoods(const Tensor& values) const;
  // Sum of -log2 likelihood over every element.
  Tensor RateBits(const Tensor& values) const;

  // Smallest interval with tail mass < kTailMass on each side, widened to
  // contain round(loc) +- 1.
  SymbolRange Range(int channel) const;
  // 16-bit table over Range(channel) plus the escape slot.
  CdfTable QuantizedCdfTable(int channel) const;
  CdfTableSet BuildTables() const;

  void CollectParameters(const std::string& prefix, ParameterList& out) const;

 private:
  Tensor loc_;
  Tensor log_scale_;
};

// Converts probabilities (last entry is the escape slot) into a strictly
// increasing 16-bit CDF with every slot holding at least one count. The
// rounding is repaired greedily by smallest code-length cost, so the result
// is deterministic given the input.
std::vector<uint32_t> QuantizePmfToCdf(std::span<const Real> pmf);

}  // namespace qrc

#endif  // QRC_ENTROPY_MODEL_H_
