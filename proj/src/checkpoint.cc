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

#include "qrc/checkpoint.h"

#include <algorithm>
#include <cstring>

#include "qrc/byte_io.h"
#include "qrc/io.h"

namespace qrc {
namespace {

constexpr std::array<uint8_t, 4> kMagic = {'Q', 'R', 'C', 'M'};

void WriteState(ByteWriter& w, const TrainingState& s) {
  w.String(s.phase);
  w.F64(s.alpha);
  w.U64(static_cast<uint64_t>(s.epochs_done));
  w.U64(static_cast<uint64_t>(s.optimizer_steps));
  auto moments = [&](const std::vector<std::vector<Real>>& m) {
    w.U32(static_cast<uint32_t>(m.size()));
    for (const auto& buf : m) {
      w.U32(static_cast<uint32_t>(buf.size()));
      for (Real v : buf) w.F64(v);
    }
  };
  moments(s.first_moments);
  moments(s.second_moments);
  w.String(s.rng_state);
  w.F64(s.stopper_best);
  w.I32(s.stopper_bad_epochs);
  w.U8(s.stopper_started ? 1 : 0);
  w.U32(static_cast<uint32_t>(s.history.size()));
  for (const EpochRecord& r : s.history) {
    w.U64(static_cast<uint64_t>(r.epoch));
    w.F64(r.rate_bpp);
    w.F64(r.distortion);
    w.F64(r.feature_distance);
    w.F64(r.loss);
    w.F64(r.wall_seconds);
  }
}

TrainingState ReadState(ByteReader& r) {
  TrainingState s;
  s.phase = r.String();
  s.alpha = r.F64();
  s.epochs_done = static_cast<int64_t>(r.U64());
  s.optimizer_steps = static_cast<int64_t>(r.U64());
  auto moments = [&](std::vector<std::vector<Real>>& m) {
    m.resize(r.U32());
    for (auto& buf : m) {
      const uint32_t n = r.U32();
      if (n > r.remaining() / 8) {
        throw CheckpointError("optimizer moment buffer overruns the file");
      }
      buf.resize(n);
      for (Real& v : buf) v = r.F64();
    }
  };
  moments(s.first_moments);
  moments(s.second_moments);
  s.rng_state = r.String();
  s.stopper_best = r.F64();
  s.stopper_bad_epochs = r.I32();
  s.stopper_started = r.U8() != 0;
  const uint32_t n = r.U32();
  if (n > r.remaining() / 48) throw CheckpointError("history overruns the file");
  s.history.resize(n);
  for (EpochRecord& e : s.history) {
    e.epoch = static_cast<int64_t>(r.U64());
    e.rate_bpp = r.F64();
    e.distortion = r.F64();
    e.feature_distance = r.F64();
    e.loss = r.F64();
    e.wall_seconds = r.F64();
  }
  return s;
}

}  // namespace

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& ckpt) {
  const ArchitectureConfig& a = ckpt.model.arch();
  ByteWriter w;
  w.Bytes(kMagic);
  w.U16(kCheckpointVersion);
  w.U8(static_cast<uint8_t>(a.profile));
  for (int v : {a.hidden_channels, a.latent_channels, a.rectifier_dim,
                a.rectifier_groups, a.rectifier_group_dim, a.attention_heads,
                a.attention_head_dim, a.num_rectifiers}) {
    w.U16(static_cast<uint16_t>(v));
  }
  w.String(ckpt.config_text);
  const ParameterList params = ckpt.model.AllParameters();
  w.U32(static_cast<uint32_t>(params.size()));
  for (const NamedParameter& p : params) {
    w.String(p.name);
    w.U8(static_cast<uint8_t>(p.tensor.rank()));
    for (int64_t d : p.tensor.shape()) w.U32(static_cast<uint32_t>(d));
    for (Real v : p.tensor.data()) w.F64(v);
  }
  w.U8(ckpt.model.frozen() ? 1 : 0);
  if (ckpt.model.frozen()) {
    const CdfTableSet& tables = ckpt.model.tables();
    w.U32(static_cast<uint32_t>(tables.size()));
    for (const CdfTable& t : tables) {
      w.I32(t.lo);
      w.U32(static_cast<uint32_t>(t.cdf.size()));
      for (uint32_t v : t.cdf) w.U32(v);
    }
  }
  w.U8(ckpt.training ? 1 : 0);
  if (ckpt.training) WriteState(w, *ckpt.training);
  return w.Release();
}

Checkpoint DeserializeCheckpoint(std::span<const uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto magic = r.Bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
      throw CheckpointError("not a QRCM checkpoint (bad magic)");
    }
    const uint16_t version = r.U16();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " +
                            std::to_string(version) + " (this build reads " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    ArchitectureConfig a;
    a.profile = static_cast<Profile>(r.U8());
    for (int* f : {&a.hidden_channels, &a.latent_channels, &a.rectifier_dim,
                   &a.rectifier_groups, &a.rectifier_group_dim,
                   &a.attention_heads, &a.attention_head_dim,
                   &a.num_rectifiers}) {
      *f = r.U16();
    }
    try {
      a.Validate();
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("checkpoint architecture: ") + e.what());
    }
    Checkpoint ckpt;
    ckpt.config_text = r.String();
    Rng unused(0);
    ckpt.model = CodecModel(a, unused);
    const ParameterList params = ckpt.model.AllParameters();
    const uint32_t count = r.U32();
    if (count != params.size()) {
      throw CheckpointError("checkpoint holds " + std::to_string(count) +
                            " parameters, architecture needs " +
                            std::to_string(params.size()));
    }
    for (const NamedParameter& p : params) {
      const std::string name = r.String();
      if (name != p.name) {
        throw CheckpointError("expected parameter " + p.name + ", found " +
                              name);
      }
      Shape shape(r.U8());
      for (int64_t& d : shape) d = r.U32();
      if (shape != p.tensor.shape()) {
        throw CheckpointError("parameter " + name + " has shape " +
                              ShapeToString(shape) + ", expected " +
                              ShapeToString(p.tensor.shape()));
      }
      for (Real& v : p.tensor.impl()->data) v = r.F64();
    }
    if (r.U8() != 0) {
      CdfTableSet tables(r.U32());
      if (tables.size() > r.remaining()) {
        throw CheckpointError("table count overruns the file");
      }
      for (CdfTable& t : tables) {
        t.lo = r.I32();
        const uint32_t n = r.U32();
        if (n > r.remaining() / 4) throw CheckpointError("table overruns file");
        t.cdf.resize(n);
        for (uint32_t& v : t.cdf) v = r.U32();
      }
      try {
        ckpt.model.SetTables(std::move(tables));
      } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint tables: ") + e.what());
      }
    }
    if (r.U8() != 0) ckpt.training = ReadState(r);
    if (r.remaining() != 0) {
      throw CheckpointError(std::to_string(r.remaining()) +
                            " unexpected trailing bytes in checkpoint");
    }
    return ckpt;
  } catch (const std::out_of_range& e) {
    throw CheckpointError(std::string("truncated checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DeserializeCheckpoint(ReadFileBytes(path));
}

uint64_t HashParameters(const ParameterList& params) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const NamedParameter& p : params) {
    mix(p.name.data(), p.name.size());
    for (int64_t d : p.tensor.shape()) mix(&d, sizeof d);
    for (Real v : p.tensor.data()) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      mix(&bits, sizeof bits);
    }
  }
  return h;
}

}  // namespace qrc
