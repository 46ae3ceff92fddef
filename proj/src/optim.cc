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

#include "qrc/optim.h"

#include <cmath>

namespace qrc {

Adam::Adam(ParameterList params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const NamedParameter& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::Step() {
  for (const NamedParameter& p : params_) {
    for (Real g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NonFiniteGradient("non-finite gradient in parameter " + p.name);
      }
    }
  }
  ++steps_;
  const Real b1 = options_.beta1, b2 = options_.beta2;
  const Real c1 = 1.0 - std::pow(b1, static_cast<Real>(steps_));
  const Real c2 = 1.0 - std::pow(b2, static_cast<Real>(steps_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    auto g = t.grad();
    auto w = t.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const Real m_hat = m[j] / c1;
      const Real v_hat = v[j] / c2;
      w[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
  ZeroGrad();
}

void Adam::ZeroGrad() {
  for (NamedParameter& p : params_) p.tensor.ZeroGrad();
}

void Adam::RestoreState(int64_t steps, std::vector<std::vector<Real>> m,
                        std::vector<std::vector<Real>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("optimizer state does not match parameters");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    const size_t n = static_cast<size_t>(params_[i].tensor.numel());
    if (m[i].size() != n || v[i].size() != n) {
      throw std::invalid_argument("optimizer moments for " + params_[i].name +
                                  " have the wrong size");
    }
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace qrc
