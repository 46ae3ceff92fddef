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

#include "qrc/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qrc/random.h"

namespace qrc {
namespace {

std::string Location(size_t input, int64_t entry) {
  return "input " + std::to_string(input) + "[" + std::to_string(entry) + "]";
}

Real Evaluate(const ScalarGraph& f, std::span<const Tensor> inputs,
              const std::string& where) {
  NoGradScope no_grad;
  const Real v = f(inputs).item();
  if (!std::isfinite(v)) {
    throw std::runtime_error("grad_check: non-finite loss when perturbing " +
                             where);
  }
  return v;
}

}  // namespace

GradCheckResult GradCheck(const ScalarGraph& f, std::vector<Tensor> inputs,
                          const GradCheckOptions& options) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.ClearGrad();
  }
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = f(inputs);
    }
    if (!std::isfinite(loss.item())) {
      throw std::runtime_error("grad_check: non-finite loss at the base point");
    }
    tape.Backward(loss);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (size_t i = 0; i < inputs.size(); ++i) {
    Tensor& t = inputs[i];
    std::vector<int64_t> entries(t.numel());
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_input > 0 &&
        t.numel() > options.max_entries_per_input) {
      // partial Fisher-Yates
      for (int64_t k = 0; k < options.max_entries_per_input; ++k) {
        std::swap(entries[k], entries[rng.UniformInt(k, t.numel() - 1)]);
      }
      entries.resize(options.max_entries_per_input);
    }
    std::vector<Real> analytic(t.numel(), 0.0);
    if (t.has_grad()) {
      std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    }
    for (int64_t j : entries) {
      const std::string where = Location(i, j);
      if (!std::isfinite(analytic[j])) {
        throw std::runtime_error("grad_check: non-finite gradient at " + where);
      }
      Real& slot = t.mutable_data()[j];
      const Real saved = slot;
      slot = saved + options.step;
      const Real plus = Evaluate(f, inputs, where);
      slot = saved - options.step;
      const Real minus = Evaluate(f, inputs, where);
      slot = saved;
      const Real numeric = (plus - minus) / (2 * options.step);
      const Real err =
          std::abs(analytic[j] - numeric) / std::max<Real>(1.0, std::abs(numeric));
      ++result.entries_checked;
      if (err > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        if (err >= result.max_rel_error) result.worst = where;
      }
    }
  }
  return result;
}

}  // namespace qrc
