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

#include "qrc/bitstream.h"

#include <algorithm>
#include <string>

#include "qrc/byte_io.h"

namespace qrc {

std::vector<uint8_t> PackBitstream(const BitstreamHeader& header,
                                   std::span<const uint8_t> payload) {
  if (payload.size() > UINT32_MAX) throw BitstreamError("payload too large");
  ByteWriter w;
  w.Bytes(kBitstreamMagic);
  w.U8(header.version);
  w.U8(header.profile);
  w.U16(header.width);
  w.U16(header.height);
  w.U16(header.latent_channels);
  w.U16(header.latent_height);
  w.U16(header.latent_width);
  w.U32(static_cast<uint32_t>(payload.size()));
  w.Bytes(payload);
  return w.Release();
}

Bitstream UnpackBitstream(std::span<const uint8_t> bytes) {
  if (bytes.size() < kBitstreamHeaderSize) {
    throw BitstreamError("bitstream shorter than its " +
                         std::to_string(kBitstreamHeaderSize) + "-byte header");
  }
  ByteReader r(bytes);
  auto magic = r.Bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kBitstreamMagic.begin())) {
    throw BitstreamError("not a QRC1 bitstream (bad magic)");
  }
  Bitstream bs;
  bs.header.version = r.U8();
  if (bs.header.version != kBitstreamVersion) {
    throw BitstreamError("unsupported bitstream version " +
                         std::to_string(bs.header.version));
  }
  bs.header.profile = r.U8();
  bs.header.width = r.U16();
  bs.header.height = r.U16();
  bs.header.latent_channels = r.U16();
  bs.header.latent_height = r.U16();
  bs.header.latent_width = r.U16();
  const uint32_t length = r.U32();
  if (length != r.remaining()) {
    throw BitstreamError("payload length field says " + std::to_string(length) +
                         " bytes but " + std::to_string(r.remaining()) +
                         " follow the header");
  }
  auto payload = r.Bytes(length);
  bs.payload.assign(payload.begin(), payload.end());
  return bs;
}

}  // namespace qrc
