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

#ifndef QRC_IO_H_
#define QRC_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/tensor.h"

namespace qrc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
std::string ReadFileText(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never see a partial file. The temporary is removed on failure.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const uint8_t> bytes);
void WriteTextAtomic(const std::filesystem::path& path,
                     const std::string& text);

// 8-bit RGB image, row-major with interleaved samples.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> samples;
  std::string source;

  uint8_t at(int x, int y, int c) const {
    return samples[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// Binary PPM (P6, maxval 255). Header comments are accepted and dropped.
ImageBuffer DecodePpm(std::span<const uint8_t> bytes,
                      const std::string& source = "<memory>");
std::vector<uint8_t> EncodePpm(const ImageBuffer& image);

ImageBuffer LoadImage(const std::filesystem::path& path);
void SaveImage(const ImageBuffer& image, const std::filesystem::path& path);

// 1 x 3 x H x W tensor with samples v / 255.
Tensor ImageToTensor(const ImageBuffer& image);
// round(v * 255) clamped to [0, 255]; expects 1 x 3 x H x W.
ImageBuffer TensorToImage(const Tensor& x);

// Every *.ppm file in `dir`, sorted by file name.
std::vector<std::filesystem::path> ListImages(const std::filesystem::path& dir);
std::vector<ImageBuffer> LoadImages(const std::filesystem::path& dir);

}  // namespace qrc

#endif  // QRC_IO_H_
