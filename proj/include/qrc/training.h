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

#ifndef QRC_TRAINING_H_
#define QRC_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qrc/checkpoint.h"
#include "qrc/codec.h"
#include "qrc/config.h"
#include "qrc/dataset.h"
#include "qrc/losses.h"
#include "qrc/optim.h"

namespace qrc {

// Lambda ladder for quality levels 1..4.
Real LambdaForQuality(int quality, DistortionKind distortion);

struct TrainingConfig {
  Profile profile = Profile::kDesk;
  int num_rectifiers = 1;
  int quality = 1;
  std::optional<Real> lambda;  // overrides the ladder
  DistortionKind distortion = DistortionKind::kMse;
  FeatureDistanceKind distance = FeatureDistanceKind::kL2;
  Real alpha = 1e-3;
  int soft_epochs = 30;
  int predictive_epochs = 30;
  int batch_size = 4;
  Real learning_rate = 1e-3;
  Real predictive_learning_rate = 1e-3;
  uint64_t seed = 1;
  int patch_size = 64;
  int patience = 3;
  Real min_relative_improvement = 1e-6;
  Real alpha_max = 1e-1;
  Real alpha_min = 1e-5;
  int explore_epochs = 15;

  Real EffectiveLambda() const;
  LossWeights Weights() const;
  ArchitectureConfig Architecture() const;

  // Reads the documented keys; unknown keys are rejected.
  static TrainingConfig FromConfig(const Config& config);
};

// "Stops improving": the epoch loss fails to beat the best so far by the
// relative margin `patience` times in a row.
class PlateauStopper {
 public:
  PlateauStopper(int patience, Real min_relative_improvement);

  // Returns true once training should stop.
  bool Observe(Real loss);
  bool stopped() const { return bad_epochs_ >= patience_; }
  Real best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }
  bool started() const { return started_; }
  void Restore(Real best, int bad_epochs, bool started);

 private:
  int patience_;
  Real min_relative_improvement_;
  Real best_ = 0;
  int bad_epochs_ = 0;
  bool started_ = false;
};

enum class Phase { kSoft, kPredictive };
std::string PhaseName(Phase phase);

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// One training phase over a model. The soft phase updates every parameter
// with noise-relaxed latents; the rectifier sees detached inputs so the
// encoder is trained exactly as without it. The predictive phase rounds
// the latents of the frozen encoder and trains decoder and rectifiers.
class Trainer {
 public:
  Trainer(CodecModel& model, const TrainingConfig& config, Phase phase,
          const TrainingState* resume = nullptr);

  // Runs up to `epochs` further epochs, stopping early on a plateau when
  // `use_stopper` is set. Returns the records of the epochs run.
  std::vector<EpochRecord> Run(const PatchDataset& data, int epochs,
                               bool use_stopper = true,
                               const EpochCallback& on_epoch = {});

  TrainingState State() const;
  bool converged() const { return stopper_.stopped(); }
  int64_t epochs_done() const { return epochs_done_; }
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  struct SampleTerms {
    Real rate_bpp = 0;
    Real distortion = 0;
    Real feature_distance = 0;
    Real loss = 0;
  };
  SampleTerms SoftSample(const Tensor& x, Real scale);
  SampleTerms PredictiveSample(const Tensor& x, Real scale);
  void CheckFrozen() const;

  CodecModel& model_;
  TrainingConfig config_;
  Phase phase_;
  LossWeights weights_;
  Adam optimizer_;
  Rng rng_;
  PlateauStopper stopper_;
  int64_t epochs_done_ = 0;
  std::vector<EpochRecord> history_;
};

// Mean distortion of hard-quantized, rectified, clamped reconstructions.
Real MeanDistortion(const CodecModel& model, const std::vector<Tensor>& images,
                    DistortionKind kind);

// Latents y and the decoder input z (rectified when blocks > 0).
struct LatentPair {
  Tensor y;
  Tensor y_hat;
  Tensor y_tilde;
};
LatentPair ComputeLatents(const CodecModel& model, const Tensor& x,
                          int blocks = -1);

// Mean quantization error over images with the first `blocks` rectifiers.
Real MeanQuantizationError(const CodecModel& model,
                           const std::vector<Tensor>& images, int blocks = -1);

struct ExplorationConfig {
  Real alpha_max = 1e-1;
  Real alpha_min = 1e-5;
  Real factor = 0.1;
  int patience = 3;
  DistortionKind distortion = DistortionKind::kMse;
};

struct AlphaTrial {
  Real alpha = 0;
  Real final_loss = 0;
  Real distortion = 0;
  int epochs_run = 0;
};

struct ExplorationResult {
  Real best_alpha = 0;      // after the MS-SSIM adjustment
  Real selected_alpha = 0;  // ladder value with the lowest distortion
  std::vector<AlphaTrial> trials;
};

// alpha_max, alpha_max * factor, ... down to alpha_min, each rounded to 12
// significant digits.
std::vector<Real> AlphaLadder(const ExplorationConfig& config);

// Trains one candidate; `index` is its position on the ladder.
using AlphaTrialRunner = std::function<AlphaTrial(Real alpha, int index)>;

// Runs every ladder value (no early exit) and picks the lowest distortion,
// preferring the larger alpha on ties. For MS-SSIM targets the chosen value
// is multiplied by 0.1.
ExplorationResult ExploreAlpha(const ExplorationConfig& config,
                               const AlphaTrialRunner& run_trial);

// Trial runner that resumes every candidate from `soft_model` with a fresh
// optimizer and trains the predictive phase until the plateau rule fires or
// `config.explore_epochs` pass. The seed is config.seed ^ index.
AlphaTrialRunner PredictiveTrialRunner(const CodecModel& soft_model,
                                       const PatchDataset& data,
                                       const TrainingConfig& config);

}  // namespace qrc

#endif  // QRC_TRAINING_H_
