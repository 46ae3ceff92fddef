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

#include "qrc/codec.h"

#include <algorithm>
#include <stdexcept>

#include "qrc/bitstream.h"
#include "qrc/ops.h"

namespace qrc {
namespace {

constexpr int kTransformKernel = 5;
constexpr int kTransformPadding = 2;
constexpr int kEntryKernel = 7;
constexpr int kEntryPadding = 3;

int64_t MirrorIndex(int64_t i, int64_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

int64_t RoundUp(int64_t v, int64_t multiple) {
  return (v + multiple - 1) / multiple * multiple;
}

}  // namespace

std::string ProfileName(Profile profile) {
  switch (profile) {
    case Profile::kDesk:
      return "desk";
    case Profile::kFull:
      return "full";
    case Profile::kTiny:
      return "tiny";
    case Profile::kCustom:
      break;
  }
  return "custom";
}

Profile ParseProfile(const std::string& name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "full") return Profile::kFull;
  if (name == "tiny") return Profile::kTiny;
  throw std::invalid_argument("unknown profile '" + name +
                              "' (expected desk, full or tiny)");
}

ArchitectureConfig ArchitectureConfig::Desk() { return {}; }

ArchitectureConfig ArchitectureConfig::Full() {
  ArchitectureConfig a;
  a.profile = Profile::kFull;
  a.latent_channels = 192;
  a.rectifier_dim = 512;
  a.rectifier_groups = 8;
  a.rectifier_group_dim = 64;
  a.attention_heads = 4;
  a.attention_head_dim = 32;
  return a;
}

ArchitectureConfig ArchitectureConfig::Tiny() {
  ArchitectureConfig a;
  a.profile = Profile::kTiny;
  a.hidden_channels = 8;
  a.latent_channels = 8;
  a.rectifier_dim = 16;
  a.rectifier_groups = 2;
  a.rectifier_group_dim = 8;
  a.attention_heads = 2;
  a.attention_head_dim = 4;
  return a;
}

ArchitectureConfig ArchitectureConfig::ForProfile(Profile profile) {
  switch (profile) {
    case Profile::kDesk:
      return Desk();
    case Profile::kFull:
      return Full();
    case Profile::kTiny:
      return Tiny();
    case Profile::kCustom:
      break;
  }
  throw std::invalid_argument("the custom profile has no preset dimensions");
}

void ArchitectureConfig::Validate() const {
  auto check = [](int v, const char* name, int min) {
    if (v < min || v > 65535) {
      throw std::invalid_argument(std::string("architecture field ") + name +
                                  " = " + std::to_string(v) +
                                  " is out of range");
    }
  };
  check(hidden_channels, "hidden_channels", 1);
  check(latent_channels, "latent_channels", 1);
  check(rectifier_dim, "rectifier_dim", 1);
  check(rectifier_groups, "rectifier_groups", 1);
  check(rectifier_group_dim, "rectifier_group_dim", 1);
  check(attention_heads, "attention_heads", 1);
  check(attention_head_dim, "attention_head_dim", 1);
  check(num_rectifiers, "num_rectifiers", 0);
  if (rectifier_groups * rectifier_group_dim != rectifier_dim) {
    throw std::invalid_argument(
        "rectifier_groups * rectifier_group_dim must equal rectifier_dim");
  }
  if (rectifier_dim % attention_heads != 0) {
    throw std::invalid_argument(
        "rectifier_dim must be divisible by attention_heads");
  }
}

Encoder::Encoder(const ArchitectureConfig& arch, Rng& rng) {
  const int c = arch.hidden_channels;
  const int widths[4] = {3, c, c, arch.latent_channels};
  for (int i = 0; i < 3; ++i) {
    convs_.emplace_back(widths[i], widths[i + 1], kTransformKernel, 2,
                        kTransformPadding, rng);
  }
}

Tensor Encoder::Forward(const Tensor& x) const {
  Tensor h = x;
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].Forward(h);
    if (i + 1 < convs_.size()) h = LeakyRelu(h, kLeakySlope);
  }
  return h;
}

void Encoder::CollectParameters(const std::string& prefix,
                                ParameterList& out) const {
  for (size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].CollectParameters(prefix + ".conv" + std::to_string(i), out);
  }
}

Decoder::Decoder(const ArchitectureConfig& arch, Rng& rng) {
  const int c = arch.hidden_channels;
  const int widths[4] = {arch.latent_channels, c, c, 3};
  for (int i = 0; i < 3; ++i) {
    deconvs_.emplace_back(widths[i], widths[i + 1], kTransformKernel, 2,
                          kTransformPadding, 1, rng);
  }
}

Tensor Decoder::Forward(const Tensor& z) const {
  Tensor h = z;
  for (size_t i = 0; i < deconvs_.size(); ++i) {
    h = deconvs_[i].Forward(h);
    if (i + 1 < deconvs_.size()) h = LeakyRelu(h, kLeakySlope);
  }
  return h;
}

void Decoder::CollectParameters(const std::string& prefix,
                                ParameterList& out) const {
  for (size_t i = 0; i < deconvs_.size(); ++i) {
    deconvs_[i].CollectParameters(prefix + ".deconv" + std::to_string(i), out);
  }
}

QRBlock::QRBlock(const ArchitectureConfig& arch, Rng& rng)
    : entry_(arch.latent_channels, arch.rectifier_dim, kEntryKernel, 1,
             kEntryPadding, rng),
      set1_(arch.rectifier_groups, arch.rectifier_group_dim, rng),
      attention_(arch.rectifier_dim, arch.attention_heads,
                 arch.attention_head_dim, rng),
      set2_(arch.rectifier_groups, arch.rectifier_group_dim, rng),
      set3_(2 * arch.rectifier_groups, arch.rectifier_group_dim, rng),
      exit_(2 * arch.rectifier_dim, arch.latent_channels, 1, 1, 0, rng) {
  exit_.ZeroInit();
}

Tensor QRBlock::Forward(const Tensor& y_hat) const {
  const Tensor entry = entry_.Forward(y_hat);
  const Tensor first = set1_.Forward(entry);
  const Tensor attended = Add(first, attention_.Forward(first));
  const Tensor second = set2_.Forward(attended);
  const Tensor joined = ConcatChannels(std::vector<Tensor>{second, entry});
  return Add(y_hat, exit_.Forward(set3_.Forward(joined)));
}

void QRBlock::CollectParameters(const std::string& prefix,
                                ParameterList& out) const {
  entry_.CollectParameters(prefix + ".entry", out);
  set1_.CollectParameters(prefix + ".set1", out);
  attention_.CollectParameters(prefix + ".attention", out);
  set2_.CollectParameters(prefix + ".set2", out);
  set3_.CollectParameters(prefix + ".set3", out);
  exit_.CollectParameters(prefix + ".exit", out);
}

CodecModel::CodecModel(const ArchitectureConfig& arch, Rng& rng) : arch_(arch) {
  arch_.Validate();
  encoder_ = Encoder(arch_, rng);
  entropy_ = FactorizedEntropyModel(arch_.latent_channels);
  decoder_ = Decoder(arch_, rng);
  for (int i = 0; i < arch_.num_rectifiers; ++i) {
    rectifiers_.emplace_back(arch_, rng);
  }
}

CodecModel CodecModel::Clone() const {
  Rng unused(0);
  CodecModel out(arch_, unused);
  const ParameterList from = AllParameters();
  const ParameterList to = out.AllParameters();
  for (size_t i = 0; i < from.size(); ++i) {
    to[i].tensor.impl()->data = from[i].tensor.impl()->data;
  }
  out.tables_ = tables_;
  return out;
}

void CodecModel::AppendRectifier(Rng& rng) {
  rectifiers_.emplace_back(arch_, rng);
  arch_.num_rectifiers = num_rectifiers();
}

void CodecModel::TruncateRectifiers(int count) {
  if (count < 0 || count > num_rectifiers()) {
    throw std::out_of_range("cannot keep " + std::to_string(count) + " of " +
                            std::to_string(num_rectifiers()) + " rectifiers");
  }
  rectifiers_.resize(count);
  arch_.num_rectifiers = count;
}

Tensor CodecModel::EncodeAnalysis(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != 3) {
    throw ShapeError("encoder expects N x 3 x H x W, got " +
                     ShapeToString(x.shape()));
  }
  const int64_t h = x.dim(2), w = x.dim(3);
  if (h % kDownsampling != 0 || w % kDownsampling != 0 || h == 0 || w == 0) {
    throw ShapeError("encoder input " + ShapeToString(x.shape()) +
                     " needs height and width divisible by 8; reflect-pad to " +
                     std::to_string(RoundUp(std::max<int64_t>(h, 1), 8)) + "x" +
                     std::to_string(RoundUp(std::max<int64_t>(w, 1), 8)));
  }
  return encoder_.Forward(x);
}

Tensor CodecModel::Rectify(const Tensor& y_hat, int blocks) const {
  const int n = blocks < 0 ? num_rectifiers()
                           : std::min(blocks, num_rectifiers());
  Tensor z = y_hat;
  for (int i = 0; i < n; ++i) z = rectifiers_[i].Forward(z);
  return z;
}

Tensor CodecModel::DecodeSynthesis(const Tensor& z) const {
  if (z.rank() != 4 || z.dim(1) != arch_.latent_channels) {
    throw ShapeError("decoder expects N x " +
                     std::to_string(arch_.latent_channels) +
                     " x h x w, got " + ShapeToString(z.shape()));
  }
  return decoder_.Forward(z);
}

ParameterList CodecModel::AnalysisParameters() const {
  ParameterList out;
  encoder_.CollectParameters("encoder", out);
  entropy_.CollectParameters("entropy", out);
  return out;
}

ParameterList CodecModel::DecoderParameters() const {
  ParameterList out;
  decoder_.CollectParameters("decoder", out);
  return out;
}

ParameterList CodecModel::RectifierParameters() const {
  ParameterList out;
  for (int i = 0; i < num_rectifiers(); ++i) {
    rectifiers_[i].CollectParameters("rectifier" + std::to_string(i), out);
  }
  return out;
}

ParameterList CodecModel::AllParameters() const {
  ParameterList out = AnalysisParameters();
  decoder_.CollectParameters("decoder", out);
  for (NamedParameter& p : RectifierParameters()) out.push_back(std::move(p));
  return out;
}

void CodecModel::Freeze() { tables_ = entropy_.BuildTables(); }

const CdfTableSet& CodecModel::tables() const {
  if (!tables_) {
    throw std::logic_error("model has no coding tables; freeze it first");
  }
  return *tables_;
}

void CodecModel::SetTables(CdfTableSet tables) {
  if (static_cast<int>(tables.size()) != arch_.latent_channels) {
    throw std::invalid_argument("expected " +
                                std::to_string(arch_.latent_channels) +
                                " coding tables, got " +
                                std::to_string(tables.size()));
  }
  for (const CdfTable& t : tables) t.Validate();
  tables_ = std::move(tables);
}

Tensor Quantize(const Tensor& y, QuantizeMode mode, Rng* rng) {
  if (mode == QuantizeMode::kRound) return Round(y);
  if (rng == nullptr) {
    throw std::invalid_argument(
        "noise quantization needs a generator and is training-only");
  }
  return AddUniformNoise(y, *rng);
}

Tensor ClampUnit(const Tensor& x) {
  Tensor out = x.Detach();
  for (Real& v : out.mutable_data()) v = std::clamp<Real>(v, 0.0, 1.0);
  return out;
}

Tensor ReflectPadToMultiple(const Tensor& x, int multiple) {
  if (x.rank() != 4) {
    throw ShapeError("padding expects a rank-4 tensor, got " +
                     ShapeToString(x.shape()));
  }
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t ph = RoundUp(h, multiple), pw = RoundUp(w, multiple);
  if (ph == h && pw == w) return x;
  Tensor out({n, c, ph, pw});
  auto src = x.data();
  auto dst = out.mutable_data();
  for (int64_t p = 0; p < n * c; ++p)
    for (int64_t i = 0; i < ph; ++i) {
      const int64_t si = MirrorIndex(i, h);
      for (int64_t j = 0; j < pw; ++j) {
        dst[(p * ph + i) * pw + j] = src[(p * h + si) * w + MirrorIndex(j, w)];
      }
    }
  return out;
}

Tensor CropSpatial(const Tensor& x, int64_t height, int64_t width) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (height > h || width > w) {
    throw ShapeError("cannot crop " + ShapeToString(x.shape()) + " to " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  if (height == h && width == w) return x;
  Tensor out({n, c, height, width});
  auto src = x.data();
  auto dst = out.mutable_data();
  for (int64_t p = 0; p < n * c; ++p)
    for (int64_t i = 0; i < height; ++i)
      for (int64_t j = 0; j < width; ++j) {
        dst[(p * height + i) * width + j] = src[(p * h + i) * w + j];
      }
  return out;
}

LatentSymbols FlattenLatents(const Tensor& y_hat) {
  if (y_hat.rank() != 4 || y_hat.dim(0) != 1) {
    throw ShapeError("latents must be 1 x C x h x w, got " +
                     ShapeToString(y_hat.shape()));
  }
  const int64_t plane = y_hat.dim(2) * y_hat.dim(3);
  LatentSymbols s;
  s.values.reserve(y_hat.numel());
  s.channels.reserve(y_hat.numel());
  auto d = y_hat.data();
  for (int64_t i = 0; i < y_hat.numel(); ++i) {
    s.values.push_back(static_cast<int32_t>(d[i]));
    s.channels.push_back(static_cast<int32_t>(i / plane));
  }
  return s;
}

CompressedImage Compress(const CodecModel& model, const Tensor& x) {
  if (x.rank() != 4 || x.dim(0) != 1 || x.dim(1) != 3) {
    throw ShapeError("compress expects a 1 x 3 x H x W image, got " +
                     ShapeToString(x.shape()));
  }
  const int64_t h = x.dim(2), w = x.dim(3);
  if (h < 1 || w < 1 || h > 65535 || w > 65535) {
    throw ShapeError("image size " + ShapeToString(x.shape()) +
                     " is outside the bitstream limits");
  }
  NoGradScope no_grad;
  CompressedImage out;
  out.y = model.EncodeAnalysis(ReflectPadToMultiple(x));
  out.y_hat = Quantize(out.y, QuantizeMode::kRound);
  // The escape path carries 16 bits; anything wider saturates.
  for (Real& v : out.y_hat.mutable_data()) {
    v = std::clamp<Real>(v, -kEscapeBias, kEscapeBias - 1);
  }
  const LatentSymbols symbols = FlattenLatents(out.y_hat);
  BitstreamHeader header;
  header.profile = static_cast<uint8_t>(model.arch().profile);
  header.width = static_cast<uint16_t>(w);
  header.height = static_cast<uint16_t>(h);
  header.latent_channels = static_cast<uint16_t>(out.y_hat.dim(1));
  header.latent_height = static_cast<uint16_t>(out.y_hat.dim(2));
  header.latent_width = static_cast<uint16_t>(out.y_hat.dim(3));
  const std::vector<uint8_t> payload =
      RangeEncodeSymbols(symbols.values, symbols.channels, model.tables());
  out.bytes = PackBitstream(header, payload);
  return out;
}

DecompressedImage Decompress(const CodecModel& model,
                             std::span<const uint8_t> bytes) {
  const Bitstream bs = UnpackBitstream(bytes);
  const BitstreamHeader& hd = bs.header;
  const ArchitectureConfig& arch = model.arch();
  if (hd.profile != static_cast<uint8_t>(arch.profile)) {
    throw BitstreamError("bitstream was made with profile " +
                         std::to_string(hd.profile) + " but the model is " +
                         ProfileName(arch.profile));
  }
  if (hd.latent_channels != arch.latent_channels ||
      hd.latent_height != RoundUp(hd.height, kDownsampling) / kDownsampling ||
      hd.latent_width != RoundUp(hd.width, kDownsampling) / kDownsampling ||
      hd.width == 0 || hd.height == 0) {
    throw BitstreamError("bitstream latent dimensions do not match the image "
                         "size and model");
  }
  const int64_t c = hd.latent_channels, lh = hd.latent_height,
                lw = hd.latent_width;
  std::vector<int32_t> channels(c * lh * lw);
  for (size_t i = 0; i < channels.size(); ++i) {
    channels[i] = static_cast<int32_t>(i / (lh * lw));
  }
  const std::vector<int32_t> values =
      RangeDecodeSymbols(bs.payload, model.tables(), channels);
  NoGradScope no_grad;
  DecompressedImage out;
  out.y_hat = Tensor({1, c, lh, lw});
  auto d = out.y_hat.mutable_data();
  for (size_t i = 0; i < values.size(); ++i) d[i] = values[i];
  out.y_tilde = model.Rectify(out.y_hat);
  out.image = CropSpatial(ClampUnit(model.DecodeSynthesis(out.y_tilde)),
                          hd.height, hd.width);
  return out;
}

}  // namespace qrc
