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

#include "qrc/entropy_model.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qrc/ops.h"

namespace qrc {

FactorizedEntropyModel::FactorizedEntropyModel(int channels) {
  if (channels <= 0) throw std::invalid_argument("entropy model needs channels");
  loc_ = ConstantParameter({channels}, 0.0);
  log_scale_ = ConstantParameter({channels}, 0.0);
}

void FactorizedEntropyModel::SetChannel(int channel, Real loc, Real scale) {
  loc_.mutable_data()[channel] = loc;
  log_scale_.mutable_data()[channel] = std::log(scale);
}

Real FactorizedEntropyModel::Cdf(Real value, int channel) const {
  return StableSigmoid((value - loc_[channel]) * std::exp(-log_scale_[channel]));
}

Real FactorizedEntropyModel::Pmf(int64_t symbol, int channel) const {
  const Real inv = std::exp(-log_scale_[channel]);
  const Real centered = static_cast<Real>(symbol) - loc_[channel];
  return LogisticIntervalMass((centered - 0.5) * inv, (centered + 0.5) * inv);
}

Real FactorizedEntropyModel::EscapeMass(int channel) const {
  const SymbolRange r = Range(channel);
  const Real inv = std::exp(-log_scale_[channel]);
  const Real lower = (r.lo - 0.5 - loc_[channel]) * inv;
  const Real upper = (r.hi + 0.5 - loc_[channel]) * inv;
  return StableSigmoid(lower) + StableSigmoid(-upper);
}

Tensor FactorizedEntropyModel::Likelihoods(const Tensor& values) const {
  return ClampMin(LogisticBinMass(values, loc_, log_scale_), kMinLikelihood);
}

Tensor FactorizedEntropyModel::RateBits(const Tensor& values) const {
  return Scale(Sum(Log(Likelihoods(values))), -1.0 / std::numbers::ln2);
}

SymbolRange FactorizedEntropyModel::Range(int channel) const {
  const Real mu = loc_[channel];
  const Real scale = std::exp(log_scale_[channel]);
  // logistic quantile of 1 - tail
  const Real reach = scale * std::log((1.0 - kTailMass) / kTailMass);
  const Real center = RoundHalfAwayFromZero(mu);
  const Real hi = std::max(std::ceil(mu + reach - 0.5), center + 1);
  const Real lo = std::min(std::floor(mu - reach + 0.5), center - 1);
  if (hi - lo + 1 > kMaxTableSymbols || std::abs(lo) > kEscapeBias ||
      std::abs(hi) > kEscapeBias) {
    throw std::domain_error("entropy model channel " + std::to_string(channel) +
                            " spans too many symbols for a coding table");
  }
  return {static_cast<int32_t>(lo), static_cast<int32_t>(hi)};
}

CdfTable FactorizedEntropyModel::QuantizedCdfTable(int channel) const {
  const Real scale = std::exp(log_scale_[channel]);
  if (!(scale >= kMinScale)) {
    throw std::domain_error("entropy model channel " + std::to_string(channel) +
                            " has a degenerate scale");
  }
  const SymbolRange r = Range(channel);
  std::vector<Real> pmf;
  pmf.reserve(r.hi - r.lo + 2);
  for (int32_t k = r.lo; k <= r.hi; ++k) pmf.push_back(Pmf(k, channel));
  pmf.push_back(EscapeMass(channel));
  CdfTable table;
  table.lo = r.lo;
  table.cdf = QuantizePmfToCdf(pmf);
  return table;
}

CdfTableSet FactorizedEntropyModel::BuildTables() const {
  CdfTableSet tables;
  tables.reserve(channels());
  for (int c = 0; c < channels(); ++c) tables.push_back(QuantizedCdfTable(c));
  return tables;
}

void FactorizedEntropyModel::CollectParameters(const std::string& prefix,
                                               ParameterList& out) const {
  out.push_back({prefix + ".loc", loc_});
  out.push_back({prefix + ".log_scale", log_scale_});
}

std::vector<uint32_t> QuantizePmfToCdf(std::span<const Real> pmf) {
  const size_t n = pmf.size();
  if (n < 2 || n > kProbabilityTotal) {
    throw std::invalid_argument("pmf size unsupported for a 16-bit table");
  }
  Real total = 0;
  for (Real p : pmf) {
    if (!(p >= 0) || !std::isfinite(p)) {
      throw std::invalid_argument("pmf entries must be finite and >= 0");
    }
    total += p;
  }
  if (!(total > 0)) throw std::invalid_argument("pmf has no mass");

  std::vector<Real> prob(n);
  std::vector<int64_t> counts(n);
  int64_t sum = 0;
  for (size_t i = 0; i < n; ++i) {
    prob[i] = pmf[i] / total;
    counts[i] = std::max<int64_t>(
        1, std::llround(prob[i] * static_cast<Real>(kProbabilityTotal)));
    sum += counts[i];
  }
  // Each repair moves one count where it changes the expected code length
  // the least; ties go to the lowest index.
  while (sum > kProbabilityTotal) {
    size_t best = n;
    Real best_cost = 0;
    for (size_t i = 0; i < n; ++i) {
      if (counts[i] <= 1) continue;
      const Real cost = prob[i] * std::log2(static_cast<Real>(counts[i]) /
                                            static_cast<Real>(counts[i] - 1));
      if (best == n || cost < best_cost) {
        best = i;
        best_cost = cost;
      }
    }
    --counts[best];
    --sum;
  }
  while (sum < kProbabilityTotal) {
    size_t best = 0;
    Real best_gain = -1;
    for (size_t i = 0; i < n; ++i) {
      const Real gain = prob[i] * std::log2(static_cast<Real>(counts[i] + 1) /
                                            static_cast<Real>(counts[i]));
      if (gain > best_gain) {
        best = i;
        best_gain = gain;
      }
    }
    ++counts[best];
    ++sum;
  }
  std::vector<uint32_t> cdf(n + 1, 0);
  for (size_t i = 0; i < n; ++i) {
    cdf[i + 1] = cdf[i] + static_cast<uint32_t>(counts[i]);
  }
  return cdf;
}

}  // namespace qrc
