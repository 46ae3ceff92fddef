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

#include "qrc/training.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "qrc/metrics.h"
#include "qrc/ops.h"

namespace qrc {
namespace {

constexpr std::array<Real, 4> kMseLambdas = {0.0018, 0.0035, 0.0067, 0.0130};
constexpr std::array<Real, 4> kMsSsimLambdas = {2.40, 4.58, 8.73, 16.64};

ParameterList PhaseParameters(const CodecModel& model, Phase phase) {
  if (phase == Phase::kSoft) return model.AllParameters();
  ParameterList out = model.DecoderParameters();
  for (NamedParameter& p : model.RectifierParameters()) {
    out.push_back(std::move(p));
  }
  return out;
}

Real RoundSignificant(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::stod(buf);
}

}  // namespace

Real LambdaForQuality(int quality, DistortionKind distortion) {
  if (quality < 1 || quality > 4) {
    throw std::invalid_argument("quality must be 1..4, got " +
                                std::to_string(quality));
  }
  return distortion == DistortionKind::kMse ? kMseLambdas[quality - 1]
                                            : kMsSsimLambdas[quality - 1];
}

Real TrainingConfig::EffectiveLambda() const {
  return lambda ? *lambda : LambdaForQuality(quality, distortion);
}

LossWeights TrainingConfig::Weights() const {
  LossWeights w;
  w.lambda = EffectiveLambda();
  w.alpha = alpha;
  w.distortion = distortion;
  w.distance = distance;
  return w;
}

ArchitectureConfig TrainingConfig::Architecture() const {
  ArchitectureConfig a = ArchitectureConfig::ForProfile(profile);
  a.num_rectifiers = num_rectifiers;
  return a;
}

TrainingConfig TrainingConfig::FromConfig(const Config& c) {
  c.RequireKnown({"profile", "n_qr", "q", "lambda", "distortion", "distance",
                  "alpha", "epochs", "predictive_epochs", "batch", "lr",
                  "predictive_lr", "seed", "patch", "patience",
                  "min_improvement", "alpha_max", "alpha_min",
                  "explore_epochs"});
  TrainingConfig t;
  t.profile = ParseProfile(c.GetString("profile", "desk"));
  t.num_rectifiers = static_cast<int>(c.GetInt("n_qr", t.num_rectifiers));
  t.quality = static_cast<int>(c.GetInt("q", t.quality));
  t.distortion = ParseDistortion(c.GetString("distortion", "mse"));
  if (c.Has("lambda")) t.lambda = c.GetReal("lambda", 0);
  t.distance = ParseFeatureDistance(c.GetString("distance", "l2"));
  t.alpha = c.GetReal("alpha", t.alpha);
  t.soft_epochs = static_cast<int>(c.GetInt("epochs", t.soft_epochs));
  t.predictive_epochs =
      static_cast<int>(c.GetInt("predictive_epochs", t.predictive_epochs));
  t.batch_size = static_cast<int>(c.GetInt("batch", t.batch_size));
  t.learning_rate = c.GetReal("lr", t.learning_rate);
  t.predictive_learning_rate =
      c.GetReal("predictive_lr", t.predictive_learning_rate);
  t.seed = c.GetUnsigned("seed", t.seed);
  t.patch_size = static_cast<int>(c.GetInt("patch", t.patch_size));
  t.patience = static_cast<int>(c.GetInt("patience", t.patience));
  t.min_relative_improvement =
      c.GetReal("min_improvement", t.min_relative_improvement);
  t.alpha_max = c.GetReal("alpha_max", t.alpha_max);
  t.alpha_min = c.GetReal("alpha_min", t.alpha_min);
  t.explore_epochs = static_cast<int>(c.GetInt("explore_epochs", t.explore_epochs));

  auto fail = [](const std::string& what) { throw ConfigError(what); };
  LambdaForQuality(t.quality, t.distortion);
  if (!(t.EffectiveLambda() > 0)) fail("lambda must be > 0");
  if (!(t.alpha >= 0)) fail("alpha must be >= 0");
  if (t.num_rectifiers < 0) fail("n_qr must be >= 0");
  if (t.soft_epochs < 0 || t.predictive_epochs < 0 || t.explore_epochs < 0) {
    fail("epoch counts must be >= 0");
  }
  if (t.batch_size < 1) fail("batch must be >= 1");
  if (!(t.learning_rate > 0) || !(t.predictive_learning_rate > 0)) {
    fail("learning rates must be > 0");
  }
  if (t.patch_size < 8 || t.patch_size % kDownsampling != 0) {
    fail("patch must be a positive multiple of 8");
  }
  if (t.patience < 1) fail("patience must be >= 1");
  if (!(t.alpha_max > t.alpha_min && t.alpha_min > 0)) {
    fail("need alpha_max > alpha_min > 0");
  }
  return t;
}

PlateauStopper::PlateauStopper(int patience, Real min_relative_improvement)
    : patience_(patience), min_relative_improvement_(min_relative_improvement) {
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool PlateauStopper::Observe(Real loss) {
  if (!started_ ||
      loss < best_ - min_relative_improvement_ * std::abs(best_)) {
    best_ = started_ ? std::min(best_, loss) : loss;
    started_ = true;
    bad_epochs_ = 0;
  } else {
    best_ = std::min(best_, loss);
    ++bad_epochs_;
  }
  return stopped();
}

void PlateauStopper::Restore(Real best, int bad_epochs, bool started) {
  best_ = best;
  bad_epochs_ = bad_epochs;
  started_ = started;
}

std::string PhaseName(Phase phase) {
  return phase == Phase::kSoft ? "soft" : "predictive";
}

Trainer::Trainer(CodecModel& model, const TrainingConfig& config, Phase phase,
                 const TrainingState* resume)
    : model_(model),
      config_(config),
      phase_(phase),
      weights_(config.Weights()),
      optimizer_(PhaseParameters(model, phase),
                 {.learning_rate = phase == Phase::kSoft
                                       ? config.learning_rate
                                       : config.predictive_learning_rate}),
      rng_(config.seed),
      stopper_(config.patience, config.min_relative_improvement) {
  if (phase == Phase::kPredictive) {
    for (const NamedParameter& p : model.AnalysisParameters()) {
      Tensor t = p.tensor;
      t.ClearGrad();
    }
  }
  if (resume == nullptr) return;
  if (resume->phase != PhaseName(phase)) {
    throw std::invalid_argument("cannot resume a " + resume->phase +
                                " run as the " + PhaseName(phase) + " phase");
  }
  optimizer_.RestoreState(resume->optimizer_steps, resume->first_moments,
                          resume->second_moments);
  rng_ = Rng::Deserialize(resume->rng_state);
  stopper_.Restore(resume->stopper_best, resume->stopper_bad_epochs,
                   resume->stopper_started);
  epochs_done_ = resume->epochs_done;
  history_ = resume->history;
}

TrainingState Trainer::State() const {
  TrainingState s;
  s.phase = PhaseName(phase_);
  s.alpha = config_.alpha;
  s.epochs_done = epochs_done_;
  s.optimizer_steps = optimizer_.steps();
  s.first_moments = optimizer_.first_moments();
  s.second_moments = optimizer_.second_moments();
  s.rng_state = rng_.Serialize();
  s.stopper_best = stopper_.best();
  s.stopper_bad_epochs = stopper_.bad_epochs();
  s.stopper_started = stopper_.started();
  s.history = history_;
  return s;
}

Trainer::SampleTerms Trainer::SoftSample(const Tensor& x, Real scale) {
  Tape tape;
  TapeScope scope(tape);
  const Tensor y = model_.EncodeAnalysis(x);
  const Tensor y_noisy = Quantize(y, QuantizeMode::kNoise, &rng_);
  const Tensor x_hat = model_.DecodeSynthesis(y_noisy);
  Tensor y_tilde;
  if (model_.num_rectifiers() > 0) y_tilde = model_.Rectify(y_noisy.Detach());
  const LossTerms terms = SoftLoss(x, x_hat, y_noisy, y.Detach(), y_tilde,
                                   model_.entropy(), weights_);
  tape.Backward(Scale(terms.total, scale));
  SampleTerms out;
  out.rate_bpp = terms.rate_bpp.item();
  out.distortion = terms.distortion.item();
  out.feature_distance =
      terms.feature_distance.defined() ? terms.feature_distance.item() : 0.0;
  out.loss = terms.total.item();
  return out;
}

Trainer::SampleTerms Trainer::PredictiveSample(const Tensor& x, Real scale) {
  Tensor y, y_hat;
  Real rate = 0;
  {
    NoGradScope frozen;
    y = model_.EncodeAnalysis(x);
    y_hat = Quantize(y, QuantizeMode::kRound);
    rate = model_.entropy().RateBits(y_hat).item() /
           static_cast<Real>(x.dim(2) * x.dim(3));
  }
  Tape tape;
  TapeScope scope(tape);
  const Tensor y_tilde = model_.Rectify(y_hat);
  const Tensor x_hat = model_.DecodeSynthesis(y_tilde);
  const LossTerms terms = PredictiveLoss(x, x_hat, y, y_tilde, weights_);
  tape.Backward(Scale(terms.total, scale));
  CheckFrozen();
  SampleTerms out;
  out.rate_bpp = rate;
  out.distortion = terms.distortion.item();
  out.feature_distance = terms.feature_distance.item();
  out.loss = terms.total.item();
  return out;
}

void Trainer::CheckFrozen() const {
  for (const NamedParameter& p : model_.AnalysisParameters()) {
    if (p.tensor.has_grad()) {
      throw std::logic_error("gradient reached frozen parameter " + p.name);
    }
  }
}

std::vector<EpochRecord> Trainer::Run(const PatchDataset& data, int epochs,
                                      bool use_stopper,
                                      const EpochCallback& on_epoch) {
  std::vector<EpochRecord> ran;
  for (int e = 0; e < epochs; ++e) {
    if (use_stopper && stopper_.stopped()) break;
    const auto start = std::chrono::steady_clock::now();
    const std::vector<Patch> patches = data.Epoch(rng_);
    const int n = static_cast<int>(patches.size());
    EpochRecord rec;
    rec.epoch = epochs_done_ + 1;
    for (int b = 0; b < n; b += config_.batch_size) {
      const int count = std::min(config_.batch_size, n - b);
      for (int i = b; i < b + count; ++i) {
        const Real scale = 1.0 / count;
        const SampleTerms t = phase_ == Phase::kSoft
                                  ? SoftSample(patches[i].pixels, scale)
                                  : PredictiveSample(patches[i].pixels, scale);
        if (!std::isfinite(t.loss)) {
          throw NonFiniteLoss("non-finite loss in " + PhaseName(phase_) +
                              " epoch " + std::to_string(rec.epoch) +
                              " batch " +
                              std::to_string(b / config_.batch_size));
        }
        rec.rate_bpp += t.rate_bpp / n;
        rec.distortion += t.distortion / n;
        rec.feature_distance += t.feature_distance / n;
        rec.loss += t.loss / n;
      }
      optimizer_.Step();
    }
    rec.wall_seconds = std::chrono::duration<Real>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    ++epochs_done_;
    history_.push_back(rec);
    ran.push_back(rec);
    stopper_.Observe(rec.loss);
    if (on_epoch) on_epoch(rec);
  }
  return ran;
}

LatentPair ComputeLatents(const CodecModel& model, const Tensor& x,
                          int blocks) {
  NoGradScope no_grad;
  LatentPair p;
  p.y = model.EncodeAnalysis(x);
  p.y_hat = Quantize(p.y, QuantizeMode::kRound);
  p.y_tilde = model.Rectify(p.y_hat, blocks);
  return p;
}

Real MeanDistortion(const CodecModel& model, const std::vector<Tensor>& images,
                    DistortionKind kind) {
  if (images.empty()) throw std::invalid_argument("no images to evaluate");
  NoGradScope no_grad;
  Real total = 0;
  for (const Tensor& x : images) {
    const LatentPair p = ComputeLatents(model, x);
    const Tensor x_hat = ClampUnit(model.DecodeSynthesis(p.y_tilde));
    total += Distortion(x, x_hat, kind).item();
  }
  return total / static_cast<Real>(images.size());
}

Real MeanQuantizationError(const CodecModel& model,
                           const std::vector<Tensor>& images, int blocks) {
  if (images.empty()) throw std::invalid_argument("no images to evaluate");
  Real total = 0;
  for (const Tensor& x : images) {
    const LatentPair p = ComputeLatents(model, x, blocks);
    total += QuantizationError(p.y, p.y_tilde);
  }
  return total / static_cast<Real>(images.size());
}

std::vector<Real> AlphaLadder(const ExplorationConfig& config) {
  if (!(config.alpha_max > 0 && config.alpha_min > 0 &&
        config.alpha_max >= config.alpha_min)) {
    throw std::invalid_argument("need alpha_max >= alpha_min > 0");
  }
  if (!(config.factor > 0 && config.factor < 1)) {
    throw std::invalid_argument("ladder factor must lie in (0, 1)");
  }
  std::vector<Real> ladder;
  for (Real a = config.alpha_max;
       a >= config.alpha_min * (1 - 1e-9);
       a = RoundSignificant(a * config.factor)) {
    ladder.push_back(RoundSignificant(a));
  }
  return ladder;
}

ExplorationResult ExploreAlpha(const ExplorationConfig& config,
                               const AlphaTrialRunner& run_trial) {
  ExplorationResult result;
  const std::vector<Real> ladder = AlphaLadder(config);
  int best = -1;
  for (size_t i = 0; i < ladder.size(); ++i) {
    AlphaTrial t = run_trial(ladder[i], static_cast<int>(i));
    t.alpha = ladder[i];
    if (!std::isfinite(t.distortion)) {
      throw NonFiniteLoss("alpha trial " + std::to_string(ladder[i]) +
                          " produced a non-finite distortion");
    }
    result.trials.push_back(t);
    // strict comparison keeps the earlier, larger alpha on ties
    if (best < 0 || t.distortion < result.trials[best].distortion) {
      best = static_cast<int>(i);
    }
  }
  result.selected_alpha = result.trials[best].alpha;
  result.best_alpha = config.distortion == DistortionKind::kMsSsim
                          ? RoundSignificant(result.selected_alpha * 0.1)
                          : result.selected_alpha;
  return result;
}

AlphaTrialRunner PredictiveTrialRunner(const CodecModel& soft_model,
                                       const PatchDataset& data,
                                       const TrainingConfig& config) {
  if (data.size() == 0) throw std::invalid_argument("empty exploration set");
  Rng eval_rng(config.seed);
  std::vector<Tensor> eval_images;
  for (const Patch& p : data.Epoch(eval_rng)) eval_images.push_back(p.pixels);
  return [&soft_model, &data, config,
          eval_images](Real alpha, int index) -> AlphaTrial {
    CodecModel model = soft_model.Clone();
    TrainingConfig trial = config;
    trial.alpha = alpha;
    trial.seed = config.seed ^ static_cast<uint64_t>(index);
    Trainer trainer(model, trial, Phase::kPredictive);
    const std::vector<EpochRecord> ran =
        trainer.Run(data, config.explore_epochs, true);
    AlphaTrial t;
    t.alpha = alpha;
    t.epochs_run = static_cast<int>(ran.size());
    t.final_loss = ran.empty() ? 0.0 : ran.back().loss;
    t.distortion = MeanDistortion(model, eval_images, config.distortion);
    return t;
  };
}

}  // namespace qrc
