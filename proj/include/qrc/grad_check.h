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

#ifndef QRC_GRAD_CHECK_H_
#define QRC_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qrc/tensor.h"

namespace qrc {

struct GradCheckOptions {
  Real step = 1e-5;
  // Checks at most this many entries of each input (chosen with `seed`);
  // non-positive checks every entry.
  int64_t max_entries_per_input = 0;
  uint64_t seed = 0;
};

struct GradCheckResult {
  // max |analytic - numeric| / max(1, |numeric|)
  Real max_rel_error = 0;
  // "input <i>[<j>]" of the worst entry.
  std::string worst;
  int64_t entries_checked = 0;
};

using ScalarGraph = std::function<Tensor(std::span<const Tensor>)>;

// Compares reverse-mode gradients of `f` with central differences. `f` must
// be deterministic; it runs once on a tape and twice per checked entry in
// inference mode. Non-finite values raise std::runtime_error naming the
// entry.
GradCheckResult GradCheck(const ScalarGraph& f, std::vector<Tensor> inputs,
                          const GradCheckOptions& options = {});

}  // namespace qrc

#endif  // QRC_GRAD_CHECK_H_
