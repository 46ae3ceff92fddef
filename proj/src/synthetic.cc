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

#include "qrc/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "qrc/random.h"

namespace qrc {
namespace {

using Color = std::array<double, 3>;

Color RandomColor(Rng& rng) {
  return {rng.Uniform01(), rng.Uniform01(), rng.Uniform01()};
}

double Smoothstep(double edge, double softness, double v) {
  const double t = std::clamp((edge - v) / softness + 0.5, 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

}  // namespace

ImageBuffer SyntheticImage(int width, int height, uint64_t seed) {
  Rng rng(seed * 0x9E3779B97F4A7C15ull + 1);
  std::vector<double> px(static_cast<size_t>(width) * height * 3);
  const Color top = RandomColor(rng);
  const Color bottom = RandomColor(rng);
  const double angle = rng.Uniform(0, std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double u = (x - width / 2.0) / width, v = (y - height / 2.0) / height;
      const double t = std::clamp(0.5 + ca * u + sa * v, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        px[(static_cast<size_t>(y) * width + x) * 3 + c] =
            top[c] * (1 - t) + bottom[c] * t;
      }
    }

  const int shapes = static_cast<int>(rng.UniformInt(3, 6));
  for (int s = 0; s < shapes; ++s) {
    const Color color = RandomColor(rng);
    const bool ellipse = rng.Uniform01() < 0.5;
    const double cx = rng.Uniform(0, width), cy = rng.Uniform(0, height);
    const double rx = rng.Uniform(0.08, 0.35) * width;
    const double ry = rng.Uniform(0.08, 0.35) * height;
    const double softness = rng.Uniform(0.5, 3.0);
    const double opacity = rng.Uniform(0.6, 1.0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        double inside;
        if (ellipse) {
          const double r = std::sqrt(dx * dx / (rx * rx) + dy * dy / (ry * ry));
          inside = Smoothstep(1.0, softness / std::min(rx, ry), r);
        } else {
          inside = Smoothstep(rx, softness, std::abs(dx)) *
                   Smoothstep(ry, softness, std::abs(dy));
        }
        const double a = inside * opacity;
        for (int c = 0; c < 3; ++c) {
          double& p = px[(static_cast<size_t>(y) * width + x) * 3 + c];
          p = p * (1 - a) + color[c] * a;
        }
      }
  }

  const double fx = rng.Uniform(1, 4) * 2 * std::numbers::pi / width;
  const double fy = rng.Uniform(1, 4) * 2 * std::numbers::pi / height;
  const double phase = rng.Uniform(0, 2 * std::numbers::pi);
  const double amplitude = rng.Uniform(0.02, 0.08);
  ImageBuffer img;
  img.width = width;
  img.height = height;
  img.source = "synthetic-" + std::to_string(seed);
  img.samples.resize(px.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double ripple = amplitude * std::sin(fx * x + fy * y + phase);
      for (int c = 0; c < 3; ++c) {
        const size_t i = (static_cast<size_t>(y) * width + x) * 3 + c;
        const double grain = rng.Uniform(-0.015, 0.015);
        const double v = std::clamp(px[i] + ripple + grain, 0.0, 1.0);
        img.samples[i] = static_cast<uint8_t>(std::lround(v * 255));
      }
    }
  return img;
}

std::vector<ImageBuffer> SyntheticImages(int count, int width, int height,
                                         uint64_t base_seed) {
  std::vector<ImageBuffer> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(SyntheticImage(width, height, base_seed + i));
  }
  return out;
}

}  // namespace qrc
