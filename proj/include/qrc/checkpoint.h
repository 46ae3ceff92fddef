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

#ifndef QRC_CHECKPOINT_H_
#define QRC_CHECKPOINT_H_

// Model checkpoint, little-endian throughout:
//
//   magic "QRCM", u16 format version, u8 profile id,
//   u16 x 8 architecture fields (hidden, latent, rectifier dim, groups,
//   group dim, heads, head dim, rectifier count),
//   string config text,
//   u32 parameter count, then per parameter:
//     string name, u8 rank, u32 x rank dims, f64 x numel values,
//   u8 has-tables [u32 count, per table: i32 lo, u32 entries, u32 x entries],
//   u8 has-training-state [state, see TrainingState].
//
// Strings are a u32 byte count followed by the bytes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/codec.h"

namespace qrc {

inline constexpr uint16_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  int64_t epoch = 0;
  Real rate_bpp = 0;
  Real distortion = 0;
  Real feature_distance = 0;
  Real loss = 0;
  Real wall_seconds = 0;
};

// Everything needed to continue a run exactly where it stopped.
struct TrainingState {
  std::string phase;
  Real alpha = 0;
  int64_t epochs_done = 0;
  int64_t optimizer_steps = 0;
  std::vector<std::vector<Real>> first_moments;
  std::vector<std::vector<Real>> second_moments;
  std::string rng_state;
  Real stopper_best = 0;
  int32_t stopper_bad_epochs = 0;
  bool stopper_started = false;
  std::vector<EpochRecord> history;
};

struct Checkpoint {
  CodecModel model;
  std::string config_text;
  std::optional<TrainingState> training;
};

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DeserializeCheckpoint(std::span<const uint8_t> bytes);

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// FNV-1a over parameter names, shapes and raw values.
uint64_t HashParameters(const ParameterList& params);

}  // namespace qrc

#endif  // QRC_CHECKPOINT_H_
