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

#ifndef QRC_RANGE_CODER_H_
#define QRC_RANGE_CODER_H_

// 32-bit carry-less range coder (Subbotin style) with byte-wise
// renormalization, plus symbol coding under static 16-bit CDF tables.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qrc {

inline constexpr int kProbabilityBits = 16;
inline constexpr uint32_t kProbabilityTotal = 1u << kProbabilityBits;
// Out-of-range values are sent as this bias plus the value, in 16 raw bits.
inline constexpr int32_t kEscapeBias = 32768;

class RangeCoderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integer CDF over the symbols lo..hi followed by one escape slot:
// cdf.front() == 0, cdf.back() == kProbabilityTotal, strictly increasing.
struct CdfTable {
  int32_t lo = 0;
  std::vector<uint32_t> cdf;

  int32_t num_symbols() const { return static_cast<int32_t>(cdf.size()) - 2; }
  int32_t hi() const { return lo + num_symbols() - 1; }
  int32_t escape_slot() const { return num_symbols(); }
  uint32_t frequency(int32_t slot) const { return cdf[slot + 1] - cdf[slot]; }

  // Throws RangeCoderError unless the table is well formed.
  void Validate() const;
};

using CdfTableSet = std::vector<CdfTable>;

class RangeEncoder {
 public:
  // Codes the interval [cum, cum + freq) out of kProbabilityTotal.
  void Encode(uint32_t cum, uint32_t freq);
  // Flushes the state; the encoder must not be used afterwards.
  std::vector<uint8_t> Finish();

 private:
  uint32_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Cumulative frequency of the next symbol; must be followed by Consume.
  uint32_t DecodeFrequency();
  void Consume(uint32_t cum, uint32_t freq);
  // Throws unless every byte of the stream was consumed.
  void Finish() const;

 private:
  uint8_t NextByte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// Codes symbols[i] with tables[channels[i]]. Values outside a table's range
// are sent as the escape slot followed by value + kEscapeBias in 16 raw bits;
// values outside [-32768, 32767] are rejected.
std::vector<uint8_t> RangeEncodeSymbols(std::span<const int32_t> symbols,
                                        std::span<const int32_t> channels,
                                        const CdfTableSet& tables);

std::vector<int32_t> RangeDecodeSymbols(std::span<const uint8_t> bytes,
                                        const CdfTableSet& tables,
                                        std::span<const int32_t> channels);

// Ideal code length in bits of the symbols under the quantized tables,
// counting 16 bits for every escaped value.
double TableCodeLengthBits(std::span<const int32_t> symbols,
                           std::span<const int32_t> channels,
                           const CdfTableSet& tables);

}  // namespace qrc

#endif  // QRC_RANGE_CODER_H_
