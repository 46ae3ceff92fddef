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

#include "qrc/losses.h"

#include <numbers>
#include <stdexcept>

#include "qrc/metrics.h"
#include "qrc/ops.h"

namespace qrc {
namespace {

constexpr Real kCosineEpsilon = 1e-12;

}  // namespace

std::string FeatureDistanceName(FeatureDistanceKind kind) {
  switch (kind) {
    case FeatureDistanceKind::kL2:
      return "l2";
    case FeatureDistanceKind::kL1:
      return "l1";
    case FeatureDistanceKind::kSmoothL1:
      return "smooth_l1";
    case FeatureDistanceKind::kCosine:
      return "cosine";
  }
  return "?";
}

FeatureDistanceKind ParseFeatureDistance(const std::string& name) {
  if (name == "l2") return FeatureDistanceKind::kL2;
  if (name == "l1") return FeatureDistanceKind::kL1;
  if (name == "smooth_l1") return FeatureDistanceKind::kSmoothL1;
  if (name == "cosine") return FeatureDistanceKind::kCosine;
  throw std::invalid_argument("unknown feature distance '" + name +
                              "' (expected l2, l1, smooth_l1 or cosine)");
}

std::string DistortionName(DistortionKind kind) {
  return kind == DistortionKind::kMse ? "mse" : "ms_ssim";
}

DistortionKind ParseDistortion(const std::string& name) {
  if (name == "mse") return DistortionKind::kMse;
  if (name == "ms_ssim") return DistortionKind::kMsSsim;
  throw std::invalid_argument("unknown distortion '" + name +
                              "' (expected mse or ms_ssim)");
}

Tensor FeatureDistance(const Tensor& y, const Tensor& z,
                       FeatureDistanceKind kind) {
  if (y.shape() != z.shape()) {
    throw ShapeError("feature distance needs equal shapes, got " +
                     ShapeToString(y.shape()) + " and " +
                     ShapeToString(z.shape()));
  }
  switch (kind) {
    case FeatureDistanceKind::kL2:
      return L2Norm(Sub(y, z));
    case FeatureDistanceKind::kL1:
      return Sum(Abs(Sub(y, z)));
    case FeatureDistanceKind::kSmoothL1:
      return Sum(SmoothL1(Sub(y, z)));
    case FeatureDistanceKind::kCosine: {
      const Tensor norms = AddScalar(Mul(L2Norm(y), L2Norm(z)), kCosineEpsilon);
      return AddScalar(Scale(Div(Sum(Mul(y, z)), norms), -1.0), 1.0);
    }
  }
  throw std::logic_error("unhandled feature distance kind");
}

Tensor Distortion(const Tensor& x, const Tensor& x_hat, DistortionKind kind) {
  if (x.shape() != x_hat.shape()) {
    throw ShapeError("distortion needs equal shapes, got " +
                     ShapeToString(x.shape()) + " and " +
                     ShapeToString(x_hat.shape()));
  }
  if (kind == DistortionKind::kMse) return Mean(Square(Sub(x, x_hat)));
  return AddScalar(Scale(MsSsim(x, x_hat), -1.0), 1.0);
}

Real DistortionScale(const LossWeights& w) {
  return w.distortion == DistortionKind::kMse ? w.lambda * 255.0 * 255.0
                                              : w.lambda;
}

LossTerms SoftLoss(const Tensor& x, const Tensor& x_hat, const Tensor& y_noisy,
                   const Tensor& y, const Tensor& y_tilde,
                   const FactorizedEntropyModel& entropy,
                   const LossWeights& weights) {
  const Real pixels = static_cast<Real>(x.dim(0) * x.dim(2) * x.dim(3));
  LossTerms t;
  t.rate_bpp = Scale(entropy.RateBits(y_noisy), 1.0 / pixels);
  t.distortion = Distortion(x, x_hat, weights.distortion);
  t.total = Add(t.rate_bpp, Scale(t.distortion, DistortionScale(weights)));
  if (y_tilde.defined()) {
    t.feature_distance = FeatureDistance(y, y_tilde, weights.distance);
    t.total = Add(t.total, Scale(t.feature_distance, weights.alpha));
  }
  return t;
}

LossTerms PredictiveLoss(const Tensor& x, const Tensor& x_hat, const Tensor& y,
                         const Tensor& y_tilde, const LossWeights& weights) {
  LossTerms t;
  t.distortion = Distortion(x, x_hat, weights.distortion);
  t.feature_distance = FeatureDistance(y, y_tilde, weights.distance);
  t.total = Add(t.distortion, Scale(t.feature_distance, weights.alpha));
  return t;
}

}  // namespace qrc
