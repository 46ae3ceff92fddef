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

#ifndef QRC_SYNTHETIC_H_
#define QRC_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "qrc/io.h"

namespace qrc {

// Deterministic procedural picture: a smooth two-color gradient background,
// a few soft-edged ellipses and rectangles, a low-frequency ripple and mild
// grain. Each seed gives a different image.
ImageBuffer SyntheticImage(int width, int height, uint64_t seed);

// `count` images with seeds base_seed, base_seed + 1, ...
std::vector<ImageBuffer> SyntheticImages(int count, int width, int height,
                                         uint64_t base_seed);

}  // namespace qrc

#endif  // QRC_SYNTHETIC_H_
