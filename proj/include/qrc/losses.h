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

#ifndef QRC_LOSSES_H_
#define QRC_LOSSES_H_

#include <string>

#include "qrc/entropy_model.h"
#include "qrc/tensor.h"

namespace qrc {

enum class FeatureDistanceKind { kL2, kL1, kSmoothL1, kCosine };
enum class DistortionKind { kMse, kMsSsim };

std::string FeatureDistanceName(FeatureDistanceKind kind);
FeatureDistanceKind ParseFeatureDistance(const std::string& name);
std::string DistortionName(DistortionKind kind);
DistortionKind ParseDistortion(const std::string& name);

// Distance between the true latent y and a stand-in z over all elements:
// L2 norm, L1 sum, Smooth-L1 sum, or one minus cosine similarity.
Tensor FeatureDistance(const Tensor& y, const Tensor& z,
                       FeatureDistanceKind kind = FeatureDistanceKind::kL2);

// MSE on the [0, 1] scale, or 1 - MS-SSIM.
Tensor Distortion(const Tensor& x, const Tensor& x_hat, DistortionKind kind);

struct LossWeights {
  // Rate-distortion trade-off. For MSE it multiplies 255^2 * MSE.
  Real lambda = 0.0018;
  Real alpha = 0;
  DistortionKind distortion = DistortionKind::kMse;
  FeatureDistanceKind distance = FeatureDistanceKind::kL2;
};

// Multiplier applied to the distortion term of the soft loss.
Real DistortionScale(const LossWeights& w);

struct LossTerms {
  Tensor total;
  Tensor rate_bpp;
  Tensor distortion;
  Tensor feature_distance;  // undefined without a rectifier
};

// R + lambda D + alpha D^f, R in bits per pixel of x. Pass an undefined
// y_tilde to drop the feature term.
LossTerms SoftLoss(const Tensor& x, const Tensor& x_hat, const Tensor& y_noisy,
                   const Tensor& y, const Tensor& y_tilde,
                   const FactorizedEntropyModel& entropy,
                   const LossWeights& weights);

// D + alpha D^f; the rate is fixed in this phase.
LossTerms PredictiveLoss(const Tensor& x, const Tensor& x_hat, const Tensor& y,
                         const Tensor& y_tilde, const LossWeights& weights);

}  // namespace qrc

#endif  // QRC_LOSSES_H_
