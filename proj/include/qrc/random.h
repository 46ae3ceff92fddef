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

#ifndef QRC_RANDOM_H_
#define QRC_RANDOM_H_

#include <cstdint>
#include <random>
#include <string>

namespace qrc {

// Seedable generator shared by a training context. Conversions to real
// values are done here rather than through <random> distributions so that
// draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1).
  double UniformOpen01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Unbiased integer in [lo, hi].
  int64_t UniformInt(int64_t lo, int64_t hi);

  std::string Serialize() const;
  static Rng Deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qrc

#endif  // QRC_RANDOM_H_
