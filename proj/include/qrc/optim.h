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

#ifndef QRC_OPTIM_H_
#define QRC_OPTIM_H_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qrc/layers.h"

namespace qrc {

struct AdamOptions {
  Real learning_rate = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(ParameterList params, AdamOptions options);

  // Applies one update from the accumulated gradients, then zeroes them.
  // Parameters without a gradient buffer are left untouched. Throws
  // NonFiniteGradient naming the parameter before anything is modified.
  void Step();
  void ZeroGrad();

  int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  const ParameterList& parameters() const { return params_; }

  // Moment buffers, in parameter order; exposed for checkpointing.
  const std::vector<std::vector<Real>>& first_moments() const { return m_; }
  const std::vector<std::vector<Real>>& second_moments() const { return v_; }
  void RestoreState(int64_t steps, std::vector<std::vector<Real>> m,
                    std::vector<std::vector<Real>> v);

 private:
  ParameterList params_;
  AdamOptions options_;
  int64_t steps_ = 0;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
};

}  // namespace qrc

#endif  // QRC_OPTIM_H_
