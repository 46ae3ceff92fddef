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

#include "qrc/dataset.h"

#include <numeric>
#include <stdexcept>

namespace qrc {

PatchDataset::PatchDataset(std::vector<ImageBuffer> images, int patch_size,
                           std::ostream* warnings)
    : patch_size_(patch_size) {
  if (patch_size <= 0) throw std::invalid_argument("patch size must be > 0");
  for (ImageBuffer& img : images) {
    if (img.width < patch_size || img.height < patch_size) {
      if (warnings) {
        *warnings << "warning: skipping " << img.source << " ("
                  << img.width << "x" << img.height << " is smaller than the "
                  << patch_size << "-pixel patch)\n";
      }
      continue;
    }
    images_.push_back(std::move(img));
  }
  if (images_.empty()) {
    throw std::invalid_argument("no image is at least " +
                                std::to_string(patch_size) + " pixels square");
  }
}

Tensor CropImage(const ImageBuffer& image, int x, int y, int size) {
  Tensor t({1, 3, size, size});
  auto d = t.mutable_data();
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        d[(static_cast<size_t>(c) * size + i) * size + j] =
            image.at(x + j, y + i, c) / 255.0;
      }
  return t;
}

Patch PatchDataset::Sample(int index, Rng& rng) const {
  const ImageBuffer& img = images_.at(index);
  Patch p;
  p.image = index;
  p.x = static_cast<int>(rng.UniformInt(0, img.width - patch_size_));
  p.y = static_cast<int>(rng.UniformInt(0, img.height - patch_size_));
  p.pixels = CropImage(img, p.x, p.y, patch_size_);
  return p;
}

std::vector<Patch> PatchDataset::Extract(int n, Rng& rng) const {
  std::vector<Patch> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(Sample(static_cast<int>(rng.UniformInt(0, size() - 1)), rng));
  }
  return out;
}

std::vector<Patch> PatchDataset::Epoch(Rng& rng) const {
  std::vector<int> order(size());
  std::iota(order.begin(), order.end(), 0);
  for (int i = size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng.UniformInt(0, i)]);
  }
  std::vector<Patch> out;
  out.reserve(size());
  for (int index : order) out.push_back(Sample(index, rng));
  return out;
}

}  // namespace qrc
