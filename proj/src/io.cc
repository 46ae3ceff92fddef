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

#include "qrc/io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <system_error>

namespace qrc {
namespace fs = std::filesystem;

std::vector<uint8_t> ReadFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

std::string ReadFileText(const fs::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void WriteFileAtomic(const fs::path& path, std::span<const uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("error writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
  }
}

void WriteTextAtomic(const fs::path& path, const std::string& text) {
  WriteFileAtomic(path, std::span(reinterpret_cast<const uint8_t*>(text.data()),
                                  text.size()));
}

namespace {

class PpmHeaderReader {
 public:
  PpmHeaderReader(std::span<const uint8_t> bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw IoError(source_ + ": " + what + " at byte offset " +
                  std::to_string(pos_));
  }

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int Number(const char* field) {
    SkipSpaceAndComments();
    if (pos_ >= bytes_.size()) Fail(std::string("missing ") + field);
    if (!std::isdigit(bytes_[pos_])) Fail(std::string("malformed ") + field);
    int64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 65535) Fail(std::string(field) + " too large");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  size_t pos_ = 0;
  std::span<const uint8_t> bytes_;
  std::string source_;
};

}  // namespace

ImageBuffer DecodePpm(std::span<const uint8_t> bytes,
                      const std::string& source) {
  PpmHeaderReader r(bytes, source);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    r.Fail("not a binary PPM (expected P6 magic)");
  }
  r.pos_ = 2;
  ImageBuffer img;
  img.source = source;
  img.width = r.Number("width");
  img.height = r.Number("height");
  const int maxval = r.Number("maxval");
  if (img.width <= 0 || img.height <= 0) r.Fail("zero image dimension");
  if (maxval != 255) r.Fail("maxval " + std::to_string(maxval) + " is not 255");
  if (r.pos_ >= bytes.size() || !std::isspace(bytes[r.pos_])) {
    r.Fail("missing whitespace after header");
  }
  ++r.pos_;
  const size_t need = static_cast<size_t>(img.width) * img.height * 3;
  if (bytes.size() - r.pos_ < need) {
    r.pos_ = bytes.size();
    r.Fail("truncated pixel data (expected " + std::to_string(need) +
           " sample bytes)");
  }
  img.samples.assign(bytes.begin() + r.pos_, bytes.begin() + r.pos_ + need);
  return img;
}

std::vector<uint8_t> EncodePpm(const ImageBuffer& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.samples.begin(), image.samples.end());
  return out;
}

ImageBuffer LoadImage(const fs::path& path) {
  return DecodePpm(ReadFileBytes(path), path.string());
}

void SaveImage(const ImageBuffer& image, const fs::path& path) {
  WriteFileAtomic(path, EncodePpm(image));
}

Tensor ImageToTensor(const ImageBuffer& image) {
  const int64_t h = image.height, w = image.width;
  Tensor t({1, 3, h, w});
  auto d = t.mutable_data();
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        d[(c * h + y) * w + x] = image.samples[(y * w + x) * 3 + c] / 255.0;
      }
  return t;
}

ImageBuffer TensorToImage(const Tensor& x) {
  if (x.rank() != 4 || x.dim(0) != 1 || x.dim(1) != 3) {
    throw ShapeError("image tensor must be 1 x 3 x H x W, got " +
                     ShapeToString(x.shape()));
  }
  const int64_t h = x.dim(2), w = x.dim(3);
  ImageBuffer img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.samples.resize(static_cast<size_t>(h * w * 3));
  auto d = x.data();
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t xx = 0; xx < w; ++xx) {
        const Real v = std::round(d[(c * h + y) * w + xx] * 255.0);
        img.samples[(y * w + xx) * 3 + c] =
            static_cast<uint8_t>(std::clamp<Real>(v, 0, 255));
      }
  return img;
}

std::vector<fs::path> ListImages(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename() < b.filename();
  });
  return out;
}

std::vector<ImageBuffer> LoadImages(const fs::path& dir) {
  std::vector<ImageBuffer> out;
  for (const fs::path& p : ListImages(dir)) out.push_back(LoadImage(p));
  if (out.empty()) throw IoError("no .ppm images in " + dir.string());
  return out;
}

}  // namespace qrc
