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

#include <array>
#include <vector>

#include "msqale/image.hpp"
#include "msqale/kernels.hpp"

namespace msq {

/// Separable 5-tap binomial low-pass, [1 4 6 4 1] / 16.
inline constexpr std::array<double, 5> kBinomial5 = {1.0 / 16, 4.0 / 16, 6.0 / 16,
                                                     4.0 / 16, 1.0 / 16};

struct PyramidConfig {
  int levels = 3;  // M
};

/// highpass[0] is full resolution (level 1); lowpass is G_M.
struct Pyramid {
  std::vector<Image> highpass;
  Image lowpass;
};

/// blur then keep even samples; output side ceil(n/2).
Image pyr_down(const Image& img, kernels::Exec exec = kernels::Exec::kParallel);

/// zero-insert to (width, height) then blur with twice the kernel per axis.
Image pyr_up(const Image& img, int width, int height,
             kernels::Exec exec = kernels::Exec::kParallel);

/// Laplacian decomposition, each channel independently:
///   G_0 = img, G_m = pyr_down(G_{m-1}),
///   highpass[m-1] = G_{m-1} - pyr_up(G_m), lowpass = G_M.
/// Throws kTooSmall if min(width, height) < 2^M.
Pyramid decompose(const Image& img, const PyramidConfig& cfg,
                  kernels::Exec exec = kernels::Exec::kParallel);

/// Inverse of decompose. Throws kShapeMismatch on inconsistent bands.
Image reconstruct(const Pyramid& pyr, kernels::Exec exec = kernels::Exec::kParallel);

}  // namespace msq
