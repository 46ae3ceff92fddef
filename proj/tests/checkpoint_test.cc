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

#include <gtest/gtest.h>

#include <filesystem>

#include "qrc/checkpoint.h"
#include "qrc/io.h"
#include "test_util.h"

namespace qrc {
namespace {

namespace fs = std::filesystem;
using testing::MaxAbsDiff;

fs::path TempDir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("qrc_ckpt_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CodecModel TinyModel(int rectifiers, uint64_t seed) {
  ArchitectureConfig arch = ArchitectureConfig::Tiny();
  arch.num_rectifiers = rectifiers;
  Rng rng(seed);
  CodecModel m(arch, rng);
  Rng perturb(seed + 1);
  for (const NamedParameter& p : m.RectifierParameters()) {
    for (Real& v : p.tensor.impl()->data) v += perturb.Uniform(-0.1, 0.1);
  }
  return m;
}

TrainingState SampleState() {
  TrainingState s;
  s.phase = "predictive";
  s.alpha = 0.0125;
  s.epochs_done = 7;
  s.optimizer_steps = 28;
  s.first_moments = {{1.5, -2.0}, {}, {3.25}};
  s.second_moments = {{0.5, 4.0}, {}, {9.0}};
  Rng rng(3);
  rng.NextU64();
  s.rng_state = rng.Serialize();
  s.stopper_best = 1.75;
  s.stopper_bad_epochs = 2;
  s.stopper_started = true;
  s.history = {{1, 0.5, 0.01, 2.0, 0.6, 0.25}, {2, 0.4, 0.009, 1.5, 0.5, 0.5}};
  return s;
}

TEST(CheckpointTest, RoundtripsParametersAndConfig) {
  Checkpoint ckpt{TinyModel(2, 1), "q = 3\nseed = 9\n", std::nullopt};
  const Checkpoint back = DeserializeCheckpoint(SerializeCheckpoint(ckpt));
  EXPECT_EQ(back.model.arch(), ckpt.model.arch());
  EXPECT_EQ(back.config_text, ckpt.config_text);
  EXPECT_FALSE(back.model.frozen());
  EXPECT_FALSE(back.training.has_value());
  const ParameterList a = ckpt.model.AllParameters();
  const ParameterList b = back.model.AllParameters();
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].tensor.shape(), b[i].tensor.shape());
    EXPECT_EQ(MaxAbsDiff(a[i].tensor.data(), b[i].tensor.data()), 0.0);
  }
  EXPECT_EQ(HashParameters(a), HashParameters(b));
}

TEST(CheckpointTest, RoundtripsTablesAndTrainingState) {
  Checkpoint ckpt{TinyModel(1, 2), "", SampleState()};
  ckpt.model.Freeze();
  const Checkpoint back = DeserializeCheckpoint(SerializeCheckpoint(ckpt));
  ASSERT_TRUE(back.model.frozen());
  ASSERT_EQ(back.model.tables().size(), ckpt.model.tables().size());
  for (size_t c = 0; c < ckpt.model.tables().size(); ++c) {
    EXPECT_EQ(back.model.tables()[c].lo, ckpt.model.tables()[c].lo);
    EXPECT_EQ(back.model.tables()[c].cdf, ckpt.model.tables()[c].cdf);
  }
  ASSERT_TRUE(back.training.has_value());
  const TrainingState& s = *back.training;
  const TrainingState want = SampleState();
  EXPECT_EQ(s.phase, want.phase);
  EXPECT_EQ(s.alpha, want.alpha);
  EXPECT_EQ(s.epochs_done, want.epochs_done);
  EXPECT_EQ(s.optimizer_steps, want.optimizer_steps);
  EXPECT_EQ(s.first_moments, want.first_moments);
  EXPECT_EQ(s.second_moments, want.second_moments);
  EXPECT_EQ(s.rng_state, want.rng_state);
  EXPECT_EQ(s.stopper_best, want.stopper_best);
  EXPECT_EQ(s.stopper_bad_epochs, want.stopper_bad_epochs);
  EXPECT_EQ(s.stopper_started, want.stopper_started);
  ASSERT_EQ(s.history.size(), 2u);
  EXPECT_EQ(s.history[1].epoch, 2);
  EXPECT_EQ(s.history[1].feature_distance, 1.5);
  EXPECT_EQ(s.history[1].wall_seconds, 0.5);
}

TEST(CheckpointTest, FrozenModelCompressesIdenticallyAfterReload) {
  Checkpoint ckpt{TinyModel(1, 4), "", std::nullopt};
  ckpt.model.Freeze();
  const fs::path path = TempDir("reload") / "m.qrcm";
  SaveCheckpoint(ckpt, path);
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  const Checkpoint back = LoadCheckpoint(path);
  const Tensor x = testing::RandomTensor({1, 3, 19, 13}, 5, 0, 1);
  const CompressedImage a = Compress(ckpt.model, x);
  EXPECT_EQ(a.bytes, Compress(back.model, x).bytes);
  EXPECT_EQ(MaxAbsDiff(Decompress(ckpt.model, a.bytes).image.data(),
                       Decompress(back.model, a.bytes).image.data()),
            0.0);
}

TEST(CheckpointTest, RejectsUnknownVersion) {
  std::vector<uint8_t> bytes =
      SerializeCheckpoint({TinyModel(0, 6), "", std::nullopt});
  bytes[4] = 2;
  try {
    DeserializeCheckpoint(bytes);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos)
        << e.what();
  }
}

TEST(CheckpointTest, RejectsBadMagicAndTruncation) {
  std::vector<uint8_t> bytes =
      SerializeCheckpoint({TinyModel(0, 7), "", std::nullopt});
  std::vector<uint8_t> bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(DeserializeCheckpoint(bad), CheckpointError);
  for (size_t cut : {size_t{3}, size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(
        DeserializeCheckpoint(std::span<const uint8_t>(bytes.data(), cut)),
        CheckpointError)
        << cut;
  }
  std::vector<uint8_t> extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(DeserializeCheckpoint(extra), CheckpointError);
}

TEST(CheckpointTest, MissingFileIsIoError) {
  EXPECT_THROW(LoadCheckpoint(TempDir("missing") / "none.qrcm"), IoError);
}

TEST(HashParametersTest, SensitiveToEveryBit) {
  CodecModel m = TinyModel(1, 8);
  const uint64_t before = HashParameters(m.AnalysisParameters());
  CodecModel copy = m.Clone();
  EXPECT_EQ(HashParameters(copy.AnalysisParameters()), before);
  Real& v = copy.AnalysisParameters().back().tensor.impl()->data.back();
  v = std::nextafter(v, 1e9);
  EXPECT_NE(HashParameters(copy.AnalysisParameters()), before);
}

}  // namespace
}  // namespace qrc
