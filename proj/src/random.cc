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

#include "qrc/random.h"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace qrc {

int64_t Rng::UniformInt(int64_t lo, int64_t hi) {
  if (hi < lo) throw std::invalid_argument("Rng::UniformInt: empty range");
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(engine_());
  const uint64_t limit =
      std::numeric_limits<uint64_t>::max() -
      std::numeric_limits<uint64_t>::max() % span;
  uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return lo + static_cast<int64_t>(v % span);
}

std::string Rng::Serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::Deserialize(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng.engine_;
  if (is.fail()) throw std::runtime_error("corrupt generator state");
  return rng;
}

}  // namespace qrc
