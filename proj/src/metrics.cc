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

#include "qrc/metrics.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qrc/losses.h"
#include "qrc/ops.h"

namespace qrc {
namespace {

constexpr Real kC1 = 0.01 * 0.01;
constexpr Real kC2 = 0.03 * 0.03;
// Keeps Pow away from non-positive contrast terms.
constexpr Real kContrastFloor = 1e-12;

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + " needs equal shapes, got " +
                     ShapeToString(a.shape()) + " and " +
                     ShapeToString(b.shape()));
  }
}

std::vector<Real> GaussianTaps() {
  std::vector<Real> taps(kMsSsimWindow);
  Real total = 0;
  for (int i = 0; i < kMsSsimWindow; ++i) {
    const Real d = i - (kMsSsimWindow - 1) / 2.0;
    taps[i] = std::exp(-d * d / (2 * kMsSsimSigma * kMsSsimSigma));
    total += taps[i];
  }
  for (Real& t : taps) t /= total;
  return taps;
}

Tensor Blur(const Tensor& x) {
  static const Tensor row({1, 1, 1, kMsSsimWindow}, GaussianTaps());
  static const Tensor col({1, 1, kMsSsimWindow, 1}, GaussianTaps());
  return Conv2d(Conv2d(x, row, Tensor()), col, Tensor());
}

Tensor AveragePool2(const Tensor& x) {
  static const Tensor box({1, 1, 2, 2}, {0.25, 0.25, 0.25, 0.25});
  return Conv2d(x, box, Tensor(), {.stride = 2, .padding = 0});
}

Tensor SpatialMean(const Tensor& map) {
  return MeanLastAxis(Reshape(map, {map.dim(0), map.dim(2) * map.dim(3)}));
}

}  // namespace

Real Psnr(const Tensor& x, const Tensor& x_hat) {
  RequireSameShape(x, x_hat, "psnr");
  if (x.numel() == 0) throw ShapeError("psnr of an empty image");
  Real sum = 0;
  auto a = x.data();
  auto b = x_hat.data();
  for (int64_t i = 0; i < x.numel(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  const Real mse = sum / static_cast<Real>(x.numel());
  if (mse == 0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

std::vector<Real> MsSsimScaleWeights(int scales) {
  if (scales < 1 || scales > static_cast<int>(kMsSsimWeights.size())) {
    throw std::invalid_argument("ms-ssim supports 1 to 5 scales, got " +
                                std::to_string(scales));
  }
  std::vector<Real> w(kMsSsimWeights.begin(), kMsSsimWeights.begin() + scales);
  Real total = 0;
  for (Real v : w) total += v;
  for (Real& v : w) v /= total;
  return w;
}

int MaxMsSsimScales(int64_t height, int64_t width) {
  int scales = 0;
  while (scales < static_cast<int>(kMsSsimWeights.size()) &&
         height >= kMsSsimWindow && width >= kMsSsimWindow) {
    ++scales;
    height /= 2;
    width /= 2;
  }
  return scales;
}

Tensor MsSsim(const Tensor& x, const Tensor& y, int scales) {
  RequireSameShape(x, y, "ms-ssim");
  if (x.rank() != 4) {
    throw ShapeError("ms-ssim expects N x C x H x W, got " +
                     ShapeToString(x.shape()));
  }
  const std::vector<Real> weights = MsSsimScaleWeights(scales);
  const int feasible = MaxMsSsimScales(x.dim(2), x.dim(3));
  if (scales > feasible) {
    throw std::invalid_argument(
        "image " + ShapeToString(x.shape()) + " is too small for " +
        std::to_string(scales) + " ms-ssim scales; at most " +
        std::to_string(feasible) + " fit");
  }
  const int64_t planes = x.dim(0) * x.dim(1);
  Tensor a = Reshape(x, {planes, 1, x.dim(2), x.dim(3)});
  Tensor b = Reshape(y, {planes, 1, y.dim(2), y.dim(3)});
  Tensor score;
  for (int s = 0; s < scales; ++s) {
    if (s > 0) {
      a = AveragePool2(a);
      b = AveragePool2(b);
    }
    const Tensor mu_a = Blur(a);
    const Tensor mu_b = Blur(b);
    const Tensor mu_aa = Square(mu_a);
    const Tensor mu_bb = Square(mu_b);
    const Tensor mu_ab = Mul(mu_a, mu_b);
    const Tensor var_a = Sub(Blur(Square(a)), mu_aa);
    const Tensor var_b = Sub(Blur(Square(b)), mu_bb);
    const Tensor cov = Sub(Blur(Mul(a, b)), mu_ab);
    Tensor map = Div(AddScalar(Scale(cov, 2.0), kC2),
                     AddScalar(Add(var_a, var_b), kC2));
    if (s + 1 == scales) {
      const Tensor luminance = Div(AddScalar(Scale(mu_ab, 2.0), kC1),
                                   AddScalar(Add(mu_aa, mu_bb), kC1));
      map = Mul(luminance, map);
    }
    const Tensor term =
        Pow(ClampMin(SpatialMean(map), kContrastFloor), weights[s]);
    score = score.defined() ? Mul(score, term) : term;
  }
  return Mean(score);
}

Real MsSsimValue(const Tensor& x, const Tensor& y, int scales) {
  NoGradScope no_grad;
  return MsSsim(x, y, scales).item();
}

Real MsSsimDb(Real raw) {
  if (!(raw >= 0 && raw <= 1)) {
    throw std::domain_error("ms-ssim score " + std::to_string(raw) +
                            " is outside [0, 1]");
  }
  if (raw == 1) return std::numeric_limits<Real>::infinity();
  return -10.0 * std::log10(1.0 - raw);
}

Real BitsPerPixel(uint64_t payload_bytes, int64_t width, int64_t height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("bits per pixel of a zero-area image");
  }
  return 8.0 * static_cast<Real>(payload_bytes) /
         static_cast<Real>(width * height);
}

Real QuantizationError(const Tensor& y, const Tensor& z) {
  NoGradScope no_grad;
  return FeatureDistance(y, z, FeatureDistanceKind::kL2).item();
}

}  // namespace qrc
