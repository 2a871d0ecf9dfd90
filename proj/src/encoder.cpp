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

#include "msqale/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "binio.hpp"
#include "msqale/error.hpp"

namespace msq {

std::string Subband::name() const {
  switch (kind) {
    case Kind::kImage: return "image";
    case Kind::kHighpass: return "hp" + std::to_string(index);
    case Kind::kLowpass: return "lowpass";
  }
  return "unknown";
}

Subband Subband::parse(const std::string& name) {
  if (name == "image") return image();
  if (name == "lowpass") return lowpass();
  if (name.size() > 2 && name.compare(0, 2, "hp") == 0) {
    const std::string digits = name.substr(2);
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        digits.size() < 3) {
      const int m = std::stoi(digits);
      if (m >= 1) return highpass(m);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown subband '" + name + "'");
}

std::vector<Subband> Subband::all(int levels) {
  std::vector<Subband> out{image()};
  for (int m = 1; m <= levels; ++m) out.push_back(highpass(m));
  out.push_back(lowpass());
  return out;
}

void EncoderArch::validate() const {
  require(in_channels == 1 || in_channels == 3, ErrorCode::kInvalidArgument,
          "encoder input must have 1 or 3 channels");
  require(!widths.empty() && widths.size() <= 8, ErrorCode::kInvalidArgument,
          "encoder needs 1..8 blocks");
  for (int w : widths)
    require(w >= 1 && w <= 4096, ErrorCode::kInvalidArgument, "block width out of range");
  require(embedding_dim() >= 2, ErrorCode::kInvalidArgument, "embedding dimension must be >= 2");
  require(input_side >= min_side(), ErrorCode::kInvalidArgument,
          "encoder input side must be >= 2^blocks");
}

std::size_t parameter_count(const EncoderArch& arch) {
  std::size_t n = 0;
  int in = arch.in_channels;
  for (int out : arch.widths) {
    n += static_cast<std::size_t>(out) * in * 9 + out;
    in = out;
  }
  return n;
}

std::size_t EncoderWeights::kernel_offset(int block) const {
  std::size_t off = 0;
  int in = arch.in_channels;
  for (int b = 0; b < block; ++b) {
    off += static_cast<std::size_t>(arch.widths[b]) * in * 9 + arch.widths[b];
    in = arch.widths[b];
  }
  return off;
}

std::size_t EncoderWeights::kernel_size(int block) const {
  const int in = block == 0 ? arch.in_channels : arch.widths[block - 1];
  return static_cast<std::size_t>(arch.widths[block]) * in * 9;
}

std::size_t EncoderWeights::bias_offset(int block) const {
  return kernel_offset(block) + kernel_size(block);
}

std::span<float> EncoderWeights::kernel(int block) {
  return {params.data() + kernel_offset(block), kernel_size(block)};
}
std::span<const float> EncoderWeights::kernel(int block) const {
  return {params.data() + kernel_offset(block), kernel_size(block)};
}
std::span<float> EncoderWeights::bias(int block) {
  return {params.data() + bias_offset(block), static_cast<std::size_t>(arch.widths[block])};
}
std::span<const float> EncoderWeights::bias(int block) const {
  return {params.data() + bias_offset(block), static_cast<std::size_t>(arch.widths[block])};
}

EncoderWeights encoder_init(const EncoderArch& arch, SeededRng& rng, Subband subband) {
  arch.validate();
  EncoderWeights w;
  w.arch = arch;
  w.subband = subband;
  w.params.assign(parameter_count(arch), 0.0f);
  for (int b = 0; b < arch.blocks(); ++b) {
    const int in = b == 0 ? arch.in_channels : arch.widths[b - 1];
    const double bound = std::sqrt(6.0 / (9.0 * in));
    for (float& k : w.kernel(b)) k = static_cast<float>(rng.uniform(-bound, bound));
  }
  return w;
}

namespace {

void check_weights(const EncoderWeights& w) {
  require(w.params.size() == parameter_count(w.arch), ErrorCode::kShapeMismatch,
          "parameter buffer does not match the architecture");
}

}  // namespace

EncoderTrace encode_traced(const EncoderWeights& w, const Image& pixels, kernels::Exec exec) {
  check_weights(w);
  const Image* src = &pixels;
  Image replicated;
  if (pixels.channels() == 1 && w.arch.in_channels == 3) {
    replicated = to_three_channels(pixels);
    src = &replicated;
  }
  require(src->channels() == w.arch.in_channels, ErrorCode::kShapeMismatch,
          "patch channels do not match the encoder input");
  require(std::min(src->width(), src->height()) >= w.arch.min_side(), ErrorCode::kTooSmall,
          "patch smaller than 2^blocks");

  EncoderTrace t;
  std::vector<double> act = src->data();
  int h = src->height(), wd = src->width(), c = src->channels();
  for (int b = 0; b < w.arch.blocks(); ++b) {
    kernels::ConvShape shape{c, w.arch.widths[b], h, wd};
    std::vector<double> pre(shape.output_count());
    kernels::conv_forward(shape, act, w.kernel(b), w.bias(b), pre, exec);
    t.inputs.push_back(std::move(act));
    act.resize(pre.size());
    std::transform(pre.begin(), pre.end(), act.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
    t.preacts.push_back(std::move(pre));
    t.shapes.push_back(shape);
    c = shape.out_channels;
    h = shape.out_height();
    wd = shape.out_width();
  }
  const std::size_t plane = static_cast<std::size_t>(h) * wd;
  t.embedding.assign(c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += act[ch * plane + i];
    t.embedding[ch] = s / static_cast<double>(plane);
  }
  return t;
}

Embedding encode(const EncoderWeights& w, const Image& pixels, kernels::Exec exec) {
  return encode_traced(w, pixels, exec).embedding;
}

std::vector<double> encode_backward(const EncoderWeights& w, const EncoderTrace& trace,
                                    std::span<const double> grad_out, kernels::Exec exec) {
  check_weights(w);
  require(grad_out.size() == static_cast<std::size_t>(w.arch.embedding_dim()),
          ErrorCode::kShapeMismatch, "embedding gradient has the wrong dimension");
  require(trace.shapes.size() == static_cast<std::size_t>(w.arch.blocks()),
          ErrorCode::kShapeMismatch, "trace does not match the architecture");
  std::vector<double> grads(w.params.size(), 0.0);

  // Through the average pool: every position of channel c gets g_c / plane.
  const auto& last = trace.shapes.back();
  const std::size_t plane = static_cast<std::size_t>(last.out_height()) * last.out_width();
  std::vector<double> g(last.output_count());
  for (int c = 0; c < last.out_channels; ++c)
    std::fill_n(g.begin() + c * plane, plane, grad_out[c] / static_cast<double>(plane));

  for (int b = w.arch.blocks() - 1; b >= 0; --b) {
    const auto& pre = trace.preacts[b];
    for (std::size_t i = 0; i < g.size(); ++i)
      if (pre[i] <= 0.0) g[i] = 0.0;
    std::vector<double> gin;
    if (b > 0) gin.resize(trace.shapes[b].input_count());
    std::span<double> gw(grads.data() + w.kernel_offset(b), w.kernel_size(b));
    std::span<double> gb(grads.data() + w.bias_offset(b), static_cast<std::size_t>(w.arch.widths[b]));
    kernels::conv_backward(trace.shapes[b], trace.inputs[b], w.kernel(b), g, gin, gw, gb, exec);
    g = std::move(gin);
  }
  return grads;
}

std::vector<double> encode_backward(const EncoderWeights& w, const Patch& patch,
                                    std::span<const double> grad_out, kernels::Exec exec) {
  return encode_backward(w, encode_traced(w, patch.pixels, exec), grad_out, exec);
}

std::vector<std::uint8_t> weights_serialize(const EncoderWeights& w) {
  check_weights(w);
  binio::Writer out;
  out.magic("MSQW");
  out.u32(kWeightsFormatVersion);
  out.u32(static_cast<std::uint32_t>(w.arch.in_channels));
  out.u32(static_cast<std::uint32_t>(w.arch.input_side));
  out.u32(static_cast<std::uint32_t>(w.arch.blocks()));
  for (int width : w.arch.widths) out.u32(static_cast<std::uint32_t>(width));
  out.u32(static_cast<std::uint32_t>(w.subband.kind));
  out.u32(static_cast<std::uint32_t>(w.subband.index));
  out.u32(w.epoch);
  for (float p : w.params) out.f32(p);
  return out.take();
}

EncoderWeights weights_deserialize(std::span<const std::uint8_t> bytes) {
  binio::Reader in(bytes);
  in.magic("MSQW");
  const auto version = in.u32();
  if (version != kWeightsFormatVersion)
    fail(ErrorCode::kVersionMismatch, "weights format version " + std::to_string(version));
  EncoderWeights w;
  w.arch.in_channels = static_cast<int>(in.u32());
  w.arch.input_side = static_cast<int>(in.u32());
  const auto blocks = in.u32();
  if (blocks == 0 || blocks > 8) fail(ErrorCode::kCorruptData, "weights: bad block count");
  w.arch.widths.clear();
  for (std::uint32_t b = 0; b < blocks; ++b) w.arch.widths.push_back(static_cast<int>(in.u32()));
  try {
    w.arch.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptData, std::string("weights: ") + e.what());
  }
  const auto kind = in.u32();
  if (kind > 2) fail(ErrorCode::kCorruptData, "weights: bad subband kind");
  w.subband.kind = static_cast<Subband::Kind>(kind);
  w.subband.index = static_cast<int>(in.u32());
  w.epoch = in.u32();
  const std::size_t n = parameter_count(w.arch);
  if (in.remaining() < n * 4) fail(ErrorCode::kTruncated, "weights: parameter block truncated");
  w.params.resize(n);
  for (float& p : w.params) p = in.f32();
  if (!in.at_end()) fail(ErrorCode::kCorruptData, "weights: trailing bytes");
  return w;
}

void save_weights(const EncoderWeights& w, const std::string& path) {
  binio::write_file(path, weights_serialize(w));
}

EncoderWeights load_weights(const std::string& path) {
  return weights_deserialize(binio::read_file(path));
}

}  // namespace msq
