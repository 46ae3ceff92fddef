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

#ifndef QRC_METRICS_H_
#define QRC_METRICS_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qrc/tensor.h"

namespace qrc {

// Reported in place of +infinity when the images are identical.
inline constexpr Real kPsnrCap = 100.0;

// 10 log10(1 / MSE) on the [0, 1] scale, capped at kPsnrCap.
Real Psnr(const Tensor& x, const Tensor& x_hat);

inline constexpr int kMsSsimWindow = 11;
inline constexpr Real kMsSsimSigma = 1.5;
inline constexpr int kMsSsimDefaultScales = 3;
inline constexpr std::array<Real, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001,
                                                       0.2363, 0.1333};

// The first `scales` weights rescaled to sum to one.
std::vector<Real> MsSsimScaleWeights(int scales);
// Largest scale count whose coarsest level keeps both sides >= 11.
int MaxMsSsimScales(int64_t height, int64_t width);

// Differentiable MS-SSIM of N x C x H x W images in [0, 1], averaged over
// images and channels. Gaussian 11x11 window (sigma 1.5), valid filtering,
// 2x2 average pooling between scales.
Tensor MsSsim(const Tensor& x, const Tensor& y,
              int scales = kMsSsimDefaultScales);
Real MsSsimValue(const Tensor& x, const Tensor& y,
                 int scales = kMsSsimDefaultScales);

// -10 log10(1 - raw); +infinity at raw == 1.
Real MsSsimDb(Real raw);

// 8 * payload_bytes / (width * height).
Real BitsPerPixel(uint64_t payload_bytes, int64_t width, int64_t height);

// ||z - y||_2, the same quantity as the L2 feature distance.
Real QuantizationError(const Tensor& y, const Tensor& z);

struct RDPoint {
  std::string image;
  int quality = 0;
  std::string model;
  Real bpp = 0;
  Real bpp_total = 0;
  Real psnr = 0;
  Real msssim = 0;
  Real msssim_db = 0;
  Real eps_q = 0;
};

}  // namespace qrc

#endif  // QRC_METRICS_H_
