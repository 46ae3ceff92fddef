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

#ifndef QRC_BITSTREAM_H_
#define QRC_BITSTREAM_H_

// Container for one compressed image:
//
//   offset size  field
//        0    4  magic "QRC1"
//        4    1  format version (1)
//        5    1  architecture profile id
//        6    2  image width
//        8    2  image height
//       10    2  latent channels
//       12    2  latent height
//       14    2  latent width
//       16    4  payload length in bytes
//       20    -  range-coded payload
//
// All integers are little-endian.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qrc {

inline constexpr std::array<uint8_t, 4> kBitstreamMagic = {'Q', 'R', 'C', '1'};
inline constexpr uint8_t kBitstreamVersion = 1;
inline constexpr size_t kBitstreamHeaderSize = 20;

class BitstreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BitstreamHeader {
  uint8_t version = kBitstreamVersion;
  uint8_t profile = 0;
  uint16_t width = 0;
  uint16_t height = 0;
  uint16_t latent_channels = 0;
  uint16_t latent_height = 0;
  uint16_t latent_width = 0;

  friend bool operator==(const BitstreamHeader&,
                         const BitstreamHeader&) = default;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<uint8_t> payload;
};

std::vector<uint8_t> PackBitstream(const BitstreamHeader& header,
                                   std::span<const uint8_t> payload);

// Rejects a wrong magic, an unsupported version, or a payload length that
// disagrees with the data.
Bitstream UnpackBitstream(std::span<const uint8_t> bytes);

}  // namespace qrc

#endif  // QRC_BITSTREAM_H_
