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

#ifndef QRC_CODEC_H_
#define QRC_CODEC_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrc/entropy_model.h"
#include "qrc/layers.h"
#include "qrc/random.h"
#include "qrc/range_coder.h"
#include "qrc/tensor.h"

namespace qrc {

enum class Profile : uint8_t { kCustom = 0, kDesk = 1, kFull = 2, kTiny = 3 };

std::string ProfileName(Profile profile);
// Accepts "desk", "full" and "tiny".
Profile ParseProfile(const std::string& name);

struct ArchitectureConfig {
  Profile profile = Profile::kDesk;
  int hidden_channels = 32;
  int latent_channels = 32;
  int rectifier_dim = 64;
  int rectifier_groups = 4;
  int rectifier_group_dim = 16;
  int attention_heads = 2;
  int attention_head_dim = 16;
  int num_rectifiers = 1;

  static ArchitectureConfig Desk();
  static ArchitectureConfig Full();
  // Small enough for unit tests and golden files.
  static ArchitectureConfig Tiny();
  static ArchitectureConfig ForProfile(Profile profile);

  // Throws std::invalid_argument naming the first inconsistent field.
  void Validate() const;

  friend bool operator==(const ArchitectureConfig&,
                         const ArchitectureConfig&) = default;
};

inline constexpr int kDownsampling = 8;

// Three stride-2 5x5 convolutions, 3 -> hidden -> hidden -> latent.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const ArchitectureConfig& arch, Rng& rng);

  Tensor Forward(const Tensor& x) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

 private:
  std::vector<Conv2dLayer> convs_;
};

// Mirror of the encoder with stride-2 transposed convolutions.
class Decoder {
 public:
  Decoder() = default;
  Decoder(const ArchitectureConfig& arch, Rng& rng);

  Tensor Forward(const Tensor& z) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

 private:
  std::vector<ConvTranspose2dLayer> deconvs_;
};

// Rectifier block: entry 7x7 conv, grouped res-blocks, attention with a
// residual add, a second grouped set, concat with the entry features, a
// third grouped set over the doubled width and a zero-initialized 1x1 exit
// conv whose output is added to the input.
class QRBlock {
 public:
  QRBlock() = default;
  QRBlock(const ArchitectureConfig& arch, Rng& rng);

  Tensor Forward(const Tensor& y_hat) const;
  void CollectParameters(const std::string& prefix, ParameterList& out) const;

  const Conv2dLayer& entry() const { return entry_; }
  const GroupedResBlocks& first_set() const { return set1_; }
  const MultiHeadAttention& attention() const { return attention_; }
  const GroupedResBlocks& second_set() const { return set2_; }
  const GroupedResBlocks& third_set() const { return set3_; }
  const Conv2dLayer& exit() const { return exit_; }

 private:
  Conv2dLayer entry_;
  GroupedResBlocks set1_;
  MultiHeadAttention attention_;
  GroupedResBlocks set2_;
  GroupedResBlocks set3_;
  Conv2dLayer exit_;
};

enum class QuantizeMode { kNoise, kRound };

class CodecModel {
 public:
  CodecModel() = default;
  CodecModel(const ArchitectureConfig& arch, Rng& rng);

  // Copies share parameter storage; Clone() does not.
  CodecModel Clone() const;

  const ArchitectureConfig& arch() const { return arch_; }
  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  const FactorizedEntropyModel& entropy() const { return entropy_; }
  FactorizedEntropyModel& entropy() { return entropy_; }
  int num_rectifiers() const { return static_cast<int>(rectifiers_.size()); }
  const QRBlock& rectifier(int i) const { return rectifiers_[i]; }

  // Appends a freshly initialized (identity) rectifier block.
  void AppendRectifier(Rng& rng);
  // Keeps the first `count` blocks.
  void TruncateRectifiers(int count);

  // y = g_a(x). x must be N x 3 x H x W with H, W multiples of 8.
  Tensor EncodeAnalysis(const Tensor& x) const;
  // Applies the first `blocks` rectifiers (all when negative).
  Tensor Rectify(const Tensor& y_hat, int blocks = -1) const;
  Tensor DecodeSynthesis(const Tensor& z) const;

  // Encoder and entropy parameters; frozen in the predictive phase.
  ParameterList AnalysisParameters() const;
  ParameterList DecoderParameters() const;
  ParameterList RectifierParameters() const;
  ParameterList AllParameters() const;

  // Snapshots the entropy model into integer coding tables.
  void Freeze();
  bool frozen() const { return tables_.has_value(); }
  const CdfTableSet& tables() const;
  void SetTables(CdfTableSet tables);

 private:
  ArchitectureConfig arch_;
  Encoder encoder_;
  FactorizedEntropyModel entropy_;
  Decoder decoder_;
  std::vector<QRBlock> rectifiers_;
  std::optional<CdfTableSet> tables_;
};

// Round or add uniform noise. Noise mode needs a generator and is refused
// when `rng` is null, which is how compress-time callers are kept honest.
Tensor Quantize(const Tensor& y, QuantizeMode mode, Rng* rng = nullptr);

// Elementwise clamp to [0, 1]; evaluation only, never recorded.
Tensor ClampUnit(const Tensor& x);

// Pads the last two axes by mirroring so both become multiples of 8.
Tensor ReflectPadToMultiple(const Tensor& x, int multiple = kDownsampling);
// Keeps the top-left height x width window.
Tensor CropSpatial(const Tensor& x, int64_t height, int64_t width);

// Latent symbols in coding order (channel-major, raster within a channel)
// and the channel of each.
struct LatentSymbols {
  std::vector<int32_t> values;
  std::vector<int32_t> channels;
};
LatentSymbols FlattenLatents(const Tensor& y_hat);

struct CompressedImage {
  std::vector<uint8_t> bytes;  // full bitstream, header included
  Tensor y;                    // continuous latent
  Tensor y_hat;                // quantized latent
};

// x: 1 x 3 x H x W in [0, 1]. Needs a frozen model.
CompressedImage Compress(const CodecModel& model, const Tensor& x);

struct DecompressedImage {
  Tensor y_hat;
  Tensor y_tilde;   // equals y_hat when the model has no rectifier
  Tensor image;     // clamped and cropped, 1 x 3 x H x W
};

DecompressedImage Decompress(const CodecModel& model,
                             std::span<const uint8_t> bytes);

}  // namespace qrc

#endif  // QRC_CODEC_H_
