// Copyright 2026 The msqale Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "msqale/pyramid.hpp"

#include <algorithm>

#include "msqale/error.hpp"

namespace msq {

Image pyr_down(const Image& img, kernels::Exec exec) {
  const Image blurred = kernels::filter_separable(img, kBinomial5, exec);
  const int w = (img.width() + 1) / 2, h = (img.height() + 1) / 2;
  Image out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = blurred.at(c, 2 * y, 2 * x);
  return out;
}

Image pyr_up(const Image& img, int width, int height, kernels::Exec exec) {
  require((width + 1) / 2 == img.width() && (height + 1) / 2 == img.height(),
          ErrorCode::kShapeMismatch, "pyr_up target does not match the coarse band");
  Image zeros(width, height, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) zeros.at(c, 2 * y, 2 * x) = img.at(c, y, x);
  std::array<double, 5> taps{};
  std::transform(kBinomial5.begin(), kBinomial5.end(), taps.begin(),
                 [](double t) { return 2.0 * t; });
  return kernels::filter_separable(zeros, taps, exec);
}

Pyramid decompose(const Image& img, const PyramidConfig& cfg, kernels::Exec exec) {
  require(cfg.levels >= 0 && cfg.levels < 30, ErrorCode::kInvalidArgument,
          "pyramid level count out of range");
  require(!img.empty(), ErrorCode::kInvalidArgument, "cannot decompose an empty image");
  const int need = 1 << cfg.levels;
  if (std::min(img.width(), img.height()) < need)
    fail(ErrorCode::kTooSmall, "image " + std::to_string(img.width()) + "x" +
                                   std::to_string(img.height()) + " too small for " +
                                   std::to_string(cfg.levels) + " pyramid levels");
  Pyramid pyr;
  Image current = img;
  for (int m = 0; m < cfg.levels; ++m) {
    Image next = pyr_down(current, exec);
    Image up = pyr_up(next, current.width(), current.height(), exec);
    for (std::size_t i = 0; i < current.size(); ++i) current.data()[i] -= up.data()[i];
    pyr.highpass.push_back(std::move(current));
    current = std::move(next);
  }
  pyr.lowpass = std::move(current);
  return pyr;
}

Image reconstruct(const Pyramid& pyr, kernels::Exec exec) {
  require(!pyr.lowpass.empty(), ErrorCode::kShapeMismatch, "pyramid has no low-pass band");
  Image current = pyr.lowpass;
  for (auto it = pyr.highpass.rbegin(); it != pyr.highpass.rend(); ++it) {
    const Image& band = *it;
    require(band.channels() == current.channels() &&
                (band.width() + 1) / 2 == current.width() &&
                (band.height() + 1) / 2 == current.height(),
            ErrorCode::kShapeMismatch, "pyramid band dimensions are inconsistent");
    Image up = pyr_up(current, band.width(), band.height(), exec);
    for (std::size_t i = 0; i < up.size(); ++i) up.data()[i] += band.data()[i];
    current = std::move(up);
  }
  return current;
}

}  // namespace msq
