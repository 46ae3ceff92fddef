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

#ifndef QRC_DATASET_H_
#define QRC_DATASET_H_

#include <ostream>
#include <vector>

#include "qrc/io.h"
#include "qrc/random.h"
#include "qrc/tensor.h"

namespace qrc {

struct Patch {
  int image = 0;  // index into the dataset's usable images
  int x = 0;
  int y = 0;
  Tensor pixels;  // 1 x 3 x size x size
};

// Square patches cut from a fixed set of images. Images smaller than the
// patch size are skipped with a warning.
class PatchDataset {
 public:
  PatchDataset(std::vector<ImageBuffer> images, int patch_size,
               std::ostream* warnings = nullptr);

  int size() const { return static_cast<int>(images_.size()); }
  int patch_size() const { return patch_size_; }
  const ImageBuffer& image(int i) const { return images_[i]; }

  // One patch from image `index` at a uniformly drawn offset.
  Patch Sample(int index, Rng& rng) const;
  // `n` patches from uniformly drawn images.
  std::vector<Patch> Extract(int n, Rng& rng) const;
  // Every image once, in shuffled order.
  std::vector<Patch> Epoch(Rng& rng) const;

 private:
  std::vector<ImageBuffer> images_;
  int patch_size_;
};

Tensor CropImage(const ImageBuffer& image, int x, int y, int size);

}  // namespace qrc

#endif  // QRC_DATASET_H_
