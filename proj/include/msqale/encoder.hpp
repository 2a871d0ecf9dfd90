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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msqale/image.hpp"
#include "msqale/kernels.hpp"
#include "msqale/rng.hpp"

namespace msq {

/// Which pyramid level a network was trained on.
struct Subband {
  enum class Kind : std::uint32_t { kImage = 0, kHighpass = 1, kLowpass = 2 };
  Kind kind = Kind::kImage;
  int index = 0;  // 1..M for high-pass bands, 0 otherwise

  static Subband image() { return {Kind::kImage, 0}; }
  static Subband highpass(int m) { return {Kind::kHighpass, m}; }
  static Subband lowpass() { return {Kind::kLowpass, 0}; }

  /// "image", "hp1", "hp2", ..., "lowpass"
  std::string name() const;
  static Subband parse(const std::string& name);

  /// image, hp1..hpM, lowpass
  static std::vector<Subband> all(int levels);

  friend bool operator==(const Subband&, const Subband&) = default;
};

/// B blocks of (3x3 conv, stride 2, pad 1, ReLU), then global average pool.
struct EncoderArch {
  int in_channels = 3;
  int input_side = 64;  // side patches are resized to before encoding
  std::vector<int> widths = {16, 32, 64};

  int blocks() const { return static_cast<int>(widths.size()); }
  int embedding_dim() const { return widths.empty() ? 0 : widths.back(); }
  int min_side() const { return 1 << blocks(); }
  /// Throws kInvalidArgument.
  void validate() const;

  friend bool operator==(const EncoderArch&, const EncoderArch&) = default;
};

using Embedding = std::vector<double>;

/// All parameters in one flat float buffer, per block: kernel
/// [out][in][3][3] then bias [out].
struct EncoderWeights {
  EncoderArch arch;
  Subband subband;
  std::uint32_t epoch = 0;
  std::vector<float> params;

  std::size_t kernel_offset(int block) const;
  std::size_t bias_offset(int block) const;
  std::size_t kernel_size(int block) const;
  std::span<float> kernel(int block);
  std::span<const float> kernel(int block) const;
  std::span<float> bias(int block);
  std::span<const float> bias(int block) const;

  friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;
};

std::size_t parameter_count(const EncoderArch& arch);

/// Kernels ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)) with fan_in = 9 * in_channels,
/// drawn block by block in storage order; biases 0.
EncoderWeights encoder_init(const EncoderArch& arch, SeededRng& rng,
                            Subband subband = Subband::image());

/// Activations kept from a forward pass for the backward pass.
struct EncoderTrace {
  std::vector<std::vector<double>> inputs;   // input of each block
  std::vector<std::vector<double>> preacts;  // conv output before ReLU
  std::vector<kernels::ConvShape> shapes;
  Embedding embedding;
};

/// One-channel input is replicated to three when the arch expects three.
/// Throws kShapeMismatch / kTooSmall.
Embedding encode(const EncoderWeights& w, const Image& pixels,
                 kernels::Exec exec = kernels::Exec::kParallel);
inline Embedding encode(const EncoderWeights& w, const Patch& patch,
                        kernels::Exec exec = kernels::Exec::kParallel) {
  return encode(w, patch.pixels, exec);
}

EncoderTrace encode_traced(const EncoderWeights& w, const Image& pixels,
                           kernels::Exec exec = kernels::Exec::kParallel);

/// Gradient of dot(grad_out, embedding) w.r.t. every parameter, same layout
/// as EncoderWeights::params.
std::vector<double> encode_backward(const EncoderWeights& w, const EncoderTrace& trace,
                                    std::span<const double> grad_out,
                                    kernels::Exec exec = kernels::Exec::kParallel);
std::vector<double> encode_backward(const EncoderWeights& w, const Patch& patch,
                                    std::span<const double> grad_out,
                                    kernels::Exec exec = kernels::Exec::kParallel);

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

/// Little-endian: "MSQW", u32 version, u32 in_channels, u32 input_side,
/// u32 blocks, u32 widths[blocks], u32 subband kind, u32 subband index,
/// u32 epoch, f32 params[parameter_count].
std::vector<std::uint8_t> weights_serialize(const EncoderWeights& w);
/// Throws kBadMagic, kVersionMismatch, kTruncated, kCorruptData.
EncoderWeights weights_deserialize(std::span<const std::uint8_t> bytes);

void save_weights(const EncoderWeights& w, const std::string& path);
EncoderWeights load_weights(const std::string& path);

}  // namespace msq
