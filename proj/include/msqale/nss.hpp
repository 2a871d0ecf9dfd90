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

#pragma once

#include <span>
#include <vector>

#include "msqale/image.hpp"

namespace msq {

/// Asymmetric generalized Gaussian: shape alpha, left/right scales, and the
/// mean offset eta = (beta_r - beta_l) Gamma(2/alpha) / Gamma(1/alpha).
struct AggdParams {
  double alpha = 2.0;
  double beta_left = 1.0;
  double beta_right = 1.0;
  double eta = 0.0;
};

/// Mean-subtracted contrast-normalized luma, (I - mu) / (sigma + 1/255),
/// with local moments from the 7x7 Gaussian window and reflect-101 borders.
/// Throws kTooSmall below 7x7.
Image mscn(const Image& img);

/// Moment matching: the generalized Gaussian ratio is inverted by lookup on
/// alpha in [0.2, 10] with step 1e-3. Throws kInvalidArgument (< 16
/// samples) and kDegenerate (all samples identical).
AggdParams fit_aggd(std::span<const double> samples);

/// 36 values, 18 per scale (native, then 2x2 box-downsampled):
///   [0]  alpha of the MSCN fit
///   [1]  (beta_l^2 + beta_r^2) / 2 of the MSCN fit
///   [2..17] for the horizontal, vertical, main-diagonal and anti-diagonal
///           neighbour products: alpha, eta, beta_l^2, beta_r^2
/// A flat (constant) sample set reports alpha 10 with zero scales.
/// Throws kTooSmall below 32x32.
std::vector<double> nss_patch_features(const Image& patch);

inline constexpr int kNssFeatureDim = 36;

}  // namespace msq
