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

#include "qrc/range_coder.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace qrc {
namespace {

constexpr uint32_t kTop = 1u << 24;
constexpr uint32_t kBottom = 1u << 16;

// Shared renormalization rule. Returns true while another byte must be
// shifted out; may shrink `range` so that low + range never carries.
inline bool NeedsShift(uint32_t low, uint32_t& range) {
  if ((low ^ (low + range)) < kTop) return true;
  if (range < kBottom) {
    range = (0u - low) & (kBottom - 1);
    return true;
  }
  return false;
}

const CdfTable& TableFor(const CdfTableSet& tables, int32_t channel,
                         size_t index) {
  if (channel < 0 || static_cast<size_t>(channel) >= tables.size()) {
    throw RangeCoderError("symbol " + std::to_string(index) +
                          " refers to channel " + std::to_string(channel) +
                          " but only " + std::to_string(tables.size()) +
                          " tables are available");
  }
  return tables[channel];
}

void ValidateAll(const CdfTableSet& tables) {
  for (const CdfTable& t : tables) t.Validate();
}

}  // namespace

void CdfTable::Validate() const {
  if (cdf.size() < 3) {
    throw RangeCoderError("cdf table needs at least one symbol and the escape");
  }
  if (cdf.front() != 0 || cdf.back() != kProbabilityTotal) {
    throw RangeCoderError("cdf table must span [0, 65536]");
  }
  for (size_t i = 1; i < cdf.size(); ++i) {
    if (cdf[i] <= cdf[i - 1]) {
      throw RangeCoderError("cdf table is not strictly increasing at slot " +
                            std::to_string(i - 1));
    }
  }
}

void RangeEncoder::Encode(uint32_t cum, uint32_t freq) {
  range_ >>= kProbabilityBits;
  low_ += cum * range_;
  range_ *= freq;
  while (NeedsShift(low_, range_)) {
    out_.push_back(static_cast<uint8_t>(low_ >> 24));
    low_ <<= 8;
    range_ <<= 8;
  }
}

std::vector<uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 4; ++i) {
    out_.push_back(static_cast<uint8_t>(low_ >> 24));
    low_ <<= 8;
  }
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ >= bytes_.size()) {
    throw RangeCoderError("range-coded stream truncated at byte " +
                          std::to_string(pos_));
  }
  return bytes_[pos_++];
}

uint32_t RangeDecoder::DecodeFrequency() {
  range_ >>= kProbabilityBits;
  const uint32_t v = (code_ - low_) / range_;
  if (v >= kProbabilityTotal) {
    throw RangeCoderError("corrupt range-coded stream near byte " +
                          std::to_string(pos_));
  }
  return v;
}

void RangeDecoder::Consume(uint32_t cum, uint32_t freq) {
  low_ += cum * range_;
  range_ *= freq;
  while (NeedsShift(low_, range_)) {
    code_ = (code_ << 8) | NextByte();
    low_ <<= 8;
    range_ <<= 8;
  }
}

void RangeDecoder::Finish() const {
  if (pos_ != bytes_.size()) {
    throw RangeCoderError(std::to_string(bytes_.size() - pos_) +
                          " trailing bytes after the last symbol");
  }
}

std::vector<uint8_t> RangeEncodeSymbols(std::span<const int32_t> symbols,
                                        std::span<const int32_t> channels,
                                        const CdfTableSet& tables) {
  if (symbols.size() != channels.size()) {
    throw RangeCoderError("symbol and channel sequences differ in length");
  }
  ValidateAll(tables);
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const CdfTable& t = TableFor(tables, channels[i], i);
    const int32_t s = symbols[i];
    if (s >= t.lo && s <= t.hi()) {
      const int32_t slot = s - t.lo;
      enc.Encode(t.cdf[slot], t.frequency(slot));
      continue;
    }
    const int64_t raw = int64_t{s} + kEscapeBias;
    if (raw < 0 || raw >= kProbabilityTotal) {
      throw RangeCoderError("symbol " + std::to_string(i) + " value " +
                            std::to_string(s) + " exceeds the escape range");
    }
    const int32_t esc = t.escape_slot();
    enc.Encode(t.cdf[esc], t.frequency(esc));
    enc.Encode(static_cast<uint32_t>(raw), 1);
  }
  return enc.Finish();
}

std::vector<int32_t> RangeDecodeSymbols(std::span<const uint8_t> bytes,
                                        const CdfTableSet& tables,
                                        std::span<const int32_t> channels) {
  ValidateAll(tables);
  RangeDecoder dec(bytes);
  std::vector<int32_t> out;
  out.reserve(channels.size());
  for (size_t i = 0; i < channels.size(); ++i) {
    const CdfTable& t = TableFor(tables, channels[i], i);
    const uint32_t f = dec.DecodeFrequency();
    // first slot whose upper edge exceeds f
    const auto it = std::upper_bound(t.cdf.begin() + 1, t.cdf.end(), f);
    const int32_t slot = static_cast<int32_t>(it - t.cdf.begin()) - 1;
    dec.Consume(t.cdf[slot], t.frequency(slot));
    if (slot != t.escape_slot()) {
      out.push_back(t.lo + slot);
      continue;
    }
    const uint32_t raw = dec.DecodeFrequency();
    dec.Consume(raw, 1);
    out.push_back(static_cast<int32_t>(raw) - kEscapeBias);
  }
  dec.Finish();
  return out;
}

double TableCodeLengthBits(std::span<const int32_t> symbols,
                           std::span<const int32_t> channels,
                           const CdfTableSet& tables) {
  if (symbols.size() != channels.size()) {
    throw RangeCoderError("symbol and channel sequences differ in length");
  }
  double bits = 0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const CdfTable& t = TableFor(tables, channels[i], i);
    const int32_t s = symbols[i];
    int32_t slot = s - t.lo;
    if (s < t.lo || s > t.hi()) {
      slot = t.escape_slot();
      bits += kProbabilityBits;
    }
    bits -= std::log2(static_cast<double>(t.frequency(slot)) / kProbabilityTotal);
  }
  return bits;
}

}  // namespace qrc
