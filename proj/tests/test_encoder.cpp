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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "msqale/encoder.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace msq;
using msq::testing::error_of;
using msq::testing::naive_conv;
using msq::testing::random_image;
using msq::testing::relative_error;
using msq::testing::scratch_dir;

namespace {

EncoderArch tiny_arch() {
  EncoderArch a;
  a.input_side = 8;
  a.widths = {4, 6};
  return a;
}

Embedding naive_encode(const EncoderWeights& w, const Image& img) {
  std::vector<double> act = img.data();
  int c = img.channels(), h = img.height(), wd = img.width();
  for (int b = 0; b < w.arch.blocks(); ++b) {
    kernels::ConvShape s{c, w.arch.widths[b], h, wd};
    const auto k = w.kernel(b);
    const auto bias = w.bias(b);
    act = naive_conv(s, act, std::vector<float>(k.begin(), k.end()),
                     std::vector<float>(bias.begin(), bias.end()));
    for (auto& v : act) v = std::max(v, 0.0);
    c = s.out_channels;
    h = s.out_height();
    wd = s.out_width();
  }
  Embedding z(c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h * wd; ++i) z[ch] += act[ch * h * wd + i];
    z[ch] /= h * wd;
  }
  return z;
}

double objective(const EncoderWeights& w, const Image& img, const std::vector<double>& g) {
  const auto z = encode(w, img, kernels::Exec::kSerial);
  return std::inner_product(z.begin(), z.end(), g.begin(), 0.0);
}

}  // namespace

TEST_CASE("init: deterministic, zero biases, fan-in scaled bounds") {
  EncoderArch arch;
  SeededRng a(1), b(1);
  const auto w1 = encoder_init(arch, a), w2 = encoder_init(arch, b);
  CHECK(w1 == w2);
  CHECK(w1.params.size() == parameter_count(arch));
  for (int blk = 0; blk < arch.blocks(); ++blk) {
    for (float v : w1.bias(blk)) CHECK(v == 0.0f);
    const int fan_in = 9 * (blk == 0 ? arch.in_channels : arch.widths[blk - 1]);
    const double bound = std::sqrt(6.0 / fan_in);
    double lo = 1e9, hi = -1e9, s2 = 0.0;
    for (float v : w1.kernel(blk)) {
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
      s2 += static_cast<double>(v) * v;
    }
    const auto n = static_cast<double>(w1.kernel_size(blk));
    CAPTURE(blk);
    CHECK(lo >= -bound);
    CHECK(hi <= bound);
    // With n >= 432 draws the extremes sit within a few bound/n of the edges.
    CHECK(lo < -bound * (1.0 - 20.0 / n));
    CHECK(hi > bound * (1.0 - 20.0 / n));
    // Uniform(-a, a) has variance a^2 / 3.
    CHECK(s2 / n == doctest::Approx(bound * bound / 3.0).epsilon(0.15));
  }
}

TEST_CASE("init histogram over 10^4 draws is flat on [-a, a]") {
  EncoderArch arch;
  arch.widths = {16, 128};  // second block: 18432 kernel values
  SeededRng rng(2);
  const auto w = encoder_init(arch, rng);
  const auto k = w.kernel(1);
  const double bound = std::sqrt(6.0 / (9.0 * 16));
  std::vector<int> bins(10, 0);
  for (float v : k) ++bins[std::min(9, static_cast<int>((v + bound) / (2 * bound) * 10))];
  const double expect = k.size() / 10.0;
  double chi2 = 0.0;
  for (int c : bins) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 21.67);  // 9 dof, p = 0.01
}

TEST_CASE("zero weights give a zero embedding") {
  EncoderWeights w;
  w.arch = tiny_arch();
  w.params.assign(parameter_count(w.arch), 0.0f);
  for (double v : encode(w, random_image(8, 8, 3, 3))) CHECK(v == 0.0);
}

TEST_CASE("bias-free first layer is linear in the input") {
  SeededRng rng(4);
  auto w = encoder_init(tiny_arch(), rng);
  const Image x = random_image(8, 8, 3, 5, -1, 1);
  Image x2 = x;
  for (auto& v : x2.data()) v *= 2.0;
  const auto t1 = encode_traced(w, x), t2 = encode_traced(w, x2);
  for (std::size_t i = 0; i < t1.preacts[0].size(); ++i)
    CHECK(t2.preacts[0][i] == doctest::Approx(2.0 * t1.preacts[0][i]).epsilon(1e-12));
}

TEST_CASE("embedding matches a loop-based forward pass on an 8x8 patch") {
  SeededRng rng(6);
  auto w = encoder_init(tiny_arch(), rng);
  for (auto& v : w.bias(0)) v = 0.05f;
  for (auto& v : w.bias(1)) v = -0.01f;
  const Image x = random_image(8, 8, 3, 7, -1, 1);
  const auto z = encode(w, x);
  const auto ref = naive_encode(w, x);
  REQUIRE(z.size() == 6);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  CHECK(encode(w, x, kernels::Exec::kSerial) == encode(w, x, kernels::Exec::kParallel));
}

TEST_CASE("one-channel inputs are replicated to three") {
  SeededRng rng(8);
  auto w = encoder_init(tiny_arch(), rng);
  const Image g = random_image(8, 8, 1, 9);
  CHECK(encode(w, g) == encode(w, to_three_channels(g)));
}

TEST_CASE("embeddings stay finite for inputs in [-1, 1]") {
  SeededRng rng(10);
  auto w = encoder_init(EncoderArch{}, rng);
  for (double v : encode(w, random_image(64, 64, 3, 11, -1, 1))) CHECK(std::isfinite(v));
}

TEST_CASE("shape errors") {
  SeededRng rng(12);
  auto w = encoder_init(tiny_arch(), rng);
  CHECK(error_of([&] { encode(w, Image(3, 3, 3)); }) == ErrorCode::kTooSmall);
  CHECK(error_of([&] { encode(w, Image(8, 8, 2)); }) == ErrorCode::kShapeMismatch);
  w.params.pop_back();
  CHECK(error_of([&] { encode(w, Image(8, 8, 3)); }) == ErrorCode::kShapeMismatch);
  EncoderArch bad;
  bad.widths = {16, 1};
  CHECK(error_of([&] { bad.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  SeededRng rng(13);
  auto w = encoder_init(tiny_arch(), rng);
  const auto g = encode_backward(w, Patch{{0, 0, 8}, random_image(8, 8, 3, 14)},
                                 std::vector<double>(6, 0.0));
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("dead ReLU layer has zero kernel gradients") {
  SeededRng rng(15);
  auto w = encoder_init(tiny_arch(), rng);
  for (auto& v : w.bias(1)) v = -100.0f;  // every block-2 pre-activation is negative
  const auto g = encode_backward(w, Patch{{0, 0, 8}, random_image(8, 8, 3, 16)},
                                 std::vector<double>(6, 1.0));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("analytic gradients match central differences for every tensor, 5 seeds") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeededRng rng(100 + seed);
    auto w = encoder_init(tiny_arch(), rng);
    for (auto& v : w.bias(0)) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    for (auto& v : w.bias(1)) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    const Image x = random_image(8, 8, 3, rng, -1, 1);
    std::vector<double> g(6);
    for (auto& v : g) v = rng.uniform(-1, 1);
    const auto analytic = encode_backward(w, Patch{{0, 0, 8}, x}, g, kernels::Exec::kSerial);
    REQUIRE(analytic.size() == w.params.size());

    int good = 0;
    for (std::size_t i = 0; i < w.params.size(); ++i) {
      const float orig = w.params[i];
      const float up = static_cast<float>(orig + 1e-4), down = static_cast<float>(orig - 1e-4);
      w.params[i] = up;
      const double fp = objective(w, x, g);
      w.params[i] = down;
      const double fm = objective(w, x, g);
      w.params[i] = orig;
      const double fd = (fp - fm) / (static_cast<double>(up) - static_cast<double>(down));
      if (relative_error(analytic[i], fd) < 1e-3) ++good;
    }
    CAPTURE(seed);
    CHECK(good >= 0.99 * static_cast<double>(w.params.size()));
  }
}

TEST_CASE("serial and parallel backward agree bit for bit") {
  SeededRng rng(20);
  auto w = encoder_init(EncoderArch{}, rng);
  const Patch p{{0, 0, 64}, random_image(64, 64, 3, 21)};
  std::vector<double> g(64);
  for (auto& v : g) v = rng.uniform(-1, 1);
  CHECK(encode_backward(w, p, g, kernels::Exec::kSerial) ==
        encode_backward(w, p, g, kernels::Exec::kParallel));
}

TEST_CASE("serialization round trip is bit-exact and carries metadata") {
  SeededRng rng(22);
  auto w = encoder_init(EncoderArch{}, rng, Subband::highpass(2));
  w.epoch = 17;
  const auto bytes = weights_serialize(w);
  CHECK(bytes[0] == 'M');
  CHECK(bytes[3] == 'W');
  const auto back = weights_deserialize(bytes);
  CHECK(back == w);
  CHECK(back.subband == Subband::highpass(2));
  const auto dir = scratch_dir("weights");
  save_weights(w, (dir / "w.msqw").string());
  CHECK(load_weights((dir / "w.msqw").string()) == w);
}

TEST_CASE("distinct errors for truncated streams, bad magic, wrong version") {
  SeededRng rng(23);
  const auto bytes = weights_serialize(encoder_init(tiny_arch(), rng));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK(error_of([&] { weights_deserialize(truncated); }) == ErrorCode::kTruncated);
  auto header_only = bytes;
  header_only.resize(6);
  CHECK(error_of([&] { weights_deserialize(header_only); }) == ErrorCode::kTruncated);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(error_of([&] { weights_deserialize(magic); }) == ErrorCode::kBadMagic);
  auto version = bytes;
  version[4] = 9;
  CHECK(error_of([&] { weights_deserialize(version); }) == ErrorCode::kVersionMismatch);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(error_of([&] { weights_deserialize(trailing); }) == ErrorCode::kCorruptData);
  CHECK(error_of([] { load_weights("/nonexistent/w.msqw"); }) == ErrorCode::kMissingFile);
}

TEST_CASE("subband names") {
  CHECK(Subband::image().name() == "image");
  CHECK(Subband::highpass(3).name() == "hp3");
  CHECK(Subband::lowpass().name() == "lowpass");
  CHECK(Subband::parse("hp2") == Subband::highpass(2));
  CHECK(Subband::all(3).size() == 5);
  CHECK(error_of([] { Subband::parse("hp0"); }) == ErrorCode::kInvalidArgument);
}
