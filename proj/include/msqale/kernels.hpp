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

#include "msqale/image.hpp"

/// Data-parallel inner loops. Every kernel has a plain serial reference
/// implementation (kept for tests and benchmarks) and an OpenMP version.
/// The OpenMP versions use a summation order that does not depend on the
/// thread count, so results are reproducible for any OMP_NUM_THREADS.
namespace msq::kernels {

enum class Exec { kSerial, kParallel };

/// Mirror reflection without edge duplication ("reflect-101"):
/// -1 -> 1, n -> n-2. Periodic for indices far outside, n == 1 maps to 0.
int reflect_index(int i, int n);

/// Filters every plane with `taps` along x then along y (odd tap count,
/// centered), reflect-101 borders.
Image filter_separable(const Image& img, std::span<const double> taps,
                       Exec exec = Exec::kParallel);

/// 3x3 convolution, stride 2, zero padding 1. Output side is ceil(n/2).
struct ConvShape {
  int in_channels = 0;
  int out_channels = 0;
  int in_height = 0;
  int in_width = 0;

  int out_height() const { return (in_height + 1) / 2; }
  int out_width() const { return (in_width + 1) / 2; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * 9;
  }
  std::size_t input_count() const {
    return static_cast<std::size_t>(in_channels) * in_height * in_width;
  }
  std::size_t output_count() const {
    return static_cast<std::size_t>(out_channels) * out_height() * out_width();
  }
};

/// weight layout [out][in][ky][kx]; tensors are planar [channel][y][x].
void conv_forward(const ConvShape& shape, std::span<const double> input,
                  std::span<const float> weight, std::span<const float> bias,
                  std::span<double> output, Exec exec = Exec::kParallel);

/// Accumulates (+=) into grad_weight and grad_bias; overwrites grad_input
/// unless it is empty (first layer does not need it).
void conv_backward(const ConvShape& shape, std::span<const double> input,
                   std::span<const float> weight, std::span<const double> grad_output,
                   std::span<double> grad_input, std::span<double> grad_weight,
                   std::span<double> grad_bias, Exec exec = Exec::kParallel);

}  // namespace msq::kernels
