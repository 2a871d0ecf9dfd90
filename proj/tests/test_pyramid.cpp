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

#include "msqale/error.hpp"
#include "msqale/pyramid.hpp"
#include "test_util.hpp"

using namespace msq;
using msq::testing::error_of;
using msq::testing::random_image;

namespace {

int refl(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

const double kK[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// 2-D blur written as a single double sum.
Image blur2d(const Image& img, double gain) {
  Image out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        double s = 0.0;
        for (int a = -2; a <= 2; ++a)
          for (int b = -2; b <= 2; ++b)
            s += gain * kK[a + 2] * gain * kK[b + 2] *
                 img.at(c, refl(y + a, img.height()), refl(x + b, img.width()));
        out.at(c, y, x) = s;
      }
  return out;
}

Image down(const Image& img) {
  const Image b = blur2d(img, 1.0);
  Image out((img.width() + 1) / 2, (img.height() + 1) / 2, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) out.at(c, y, x) = b.at(c, 2 * y, 2 * x);
  return out;
}

Image up(const Image& img, int w, int h) {
  Image z(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) z.at(c, 2 * y, 2 * x) = img.at(c, y, x);
  return blur2d(z, 2.0);
}

Image sub(const Image& a, const Image& b) {
  Image out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

}  // namespace

TEST_CASE("constant image, M=2: zero high-pass bands, constant low-pass") {
  const Image img(16, 12, 3, 0.37);
  const Pyramid p = decompose(img, PyramidConfig{2});
  REQUIRE(p.highpass.size() == 2);
  for (const auto& h : p.highpass)
    for (double v : h.data()) CHECK(std::abs(v) < 1e-15);
  for (double v : p.lowpass.data()) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
}

TEST_CASE("M=0 is the identity") {
  const Image img = random_image(9, 7, 3, 1);
  const Pyramid p = decompose(img, PyramidConfig{0});
  CHECK(p.highpass.empty());
  CHECK(p.lowpass == img);
}

TEST_CASE("4x4 impulse at (0,0), M=1 matches a direct convolution") {
  Image img(4, 4, 1);
  img.at(0, 0, 0) = 1.0;
  const Pyramid p = decompose(img, PyramidConfig{1});
  const Image g1 = down(img);
  const Image h1 = sub(img, up(g1, 4, 4));
  CHECK(max_abs_diff(p.lowpass, g1) < 1e-15);
  CHECK(max_abs_diff(p.highpass[0], h1) < 1e-15);
  // Hand values: the kept pixel 2 sees the impulse only through the outer 1/16 tap.
  CHECK(p.lowpass.at(0, 0, 0) == doctest::Approx(36.0 / 256));
  CHECK(p.lowpass.at(0, 0, 1) == doctest::Approx(6.0 / 256));
  CHECK(p.lowpass.at(0, 1, 1) == doctest::Approx(1.0 / 256));
}

TEST_CASE("bands have ceil(dim / 2^(m-1)) sizes, odd dimensions included") {
  const Image img = random_image(37, 21, 3, 2);
  const Pyramid p = decompose(img, PyramidConfig{3});
  CHECK(p.highpass[0].width() == 37);
  CHECK(p.highpass[1].width() == 19);
  CHECK(p.highpass[2].width() == 10);
  CHECK(p.highpass[2].height() == 6);
  CHECK(p.lowpass.width() == 5);
  CHECK(p.lowpass.height() == 3);
}

TEST_CASE("decompose agrees with the direct oracle on a random odd-sized image") {
  const Image img = random_image(13, 11, 2, 3);
  const Pyramid p = decompose(img, PyramidConfig{2});
  const Image g1 = down(img), g2 = down(g1);
  CHECK(max_abs_diff(p.highpass[0], sub(img, up(g1, 13, 11))) < 1e-14);
  CHECK(max_abs_diff(p.highpass[1], sub(g1, up(g2, 7, 6))) < 1e-14);
  CHECK(max_abs_diff(p.lowpass, g2) < 1e-14);
}

TEST_CASE("perfect reconstruction of random images") {
  SeededRng rng(4);
  for (auto [w, h, m] : {std::tuple{64, 64, 3}, std::tuple{37, 50, 3}, std::tuple{9, 8, 3},
                         std::tuple{5, 3, 1}}) {
    const Image img = random_image(w, h, 3, rng);
    CHECK(max_abs_diff(reconstruct(decompose(img, PyramidConfig{m})), img) < 1e-6);
  }
}

TEST_CASE("zeroing every band reconstructs zero") {
  Pyramid p = decompose(random_image(32, 32, 3, 5), PyramidConfig{3});
  for (auto& h : p.highpass) std::fill(h.data().begin(), h.data().end(), 0.0);
  std::fill(p.lowpass.data().begin(), p.lowpass.data().end(), 0.0);
  for (double v : reconstruct(p).data()) CHECK(v == 0.0);
}

TEST_CASE("zeroing the high-pass bands leaves the iterated down/up chain") {
  const Image img = random_image(24, 20, 3, 6);
  Pyramid p = decompose(img, PyramidConfig{2});
  for (auto& h : p.highpass) std::fill(h.data().begin(), h.data().end(), 0.0);
  const Image g2 = down(down(img));
  const Image oracle = up(up(g2, 12, 10), 24, 20);
  CHECK(max_abs_diff(reconstruct(p), oracle) < 1e-14);
}

TEST_CASE("adding a constant only shifts the low-pass band") {
  const Image img = random_image(20, 20, 3, 7);
  Image shifted = img;
  for (auto& v : shifted.data()) v += 0.25;
  const Pyramid a = decompose(img, PyramidConfig{3});
  const Pyramid b = decompose(shifted, PyramidConfig{3});
  for (int m = 0; m < 3; ++m) CHECK(max_abs_diff(a.highpass[m], b.highpass[m]) < 1e-14);
  Image low = a.lowpass;
  for (auto& v : low.data()) v += 0.25;
  CHECK(max_abs_diff(low, b.lowpass) < 1e-14);
}

TEST_CASE("decompose is linear") {
  const Image x = random_image(18, 15, 3, 8), y = random_image(18, 15, 3, 9);
  Image mix = x;
  for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = 0.3 * x.data()[i] - 1.7 * y.data()[i];
  const Pyramid px = decompose(x, PyramidConfig{2}), py = decompose(y, PyramidConfig{2});
  const Pyramid pm = decompose(mix, PyramidConfig{2});
  for (int m = 0; m < 2; ++m)
    for (std::size_t i = 0; i < pm.highpass[m].size(); ++i)
      CHECK(pm.highpass[m].data()[i] ==
            doctest::Approx(0.3 * px.highpass[m].data()[i] - 1.7 * py.highpass[m].data()[i])
                .epsilon(1e-12)
                .scale(1.0));
}

TEST_CASE("serial and parallel execution agree bit for bit") {
  const Image img = random_image(45, 33, 3, 10);
  const Pyramid a = decompose(img, PyramidConfig{3}, kernels::Exec::kSerial);
  const Pyramid b = decompose(img, PyramidConfig{3}, kernels::Exec::kParallel);
  for (int m = 0; m < 3; ++m) CHECK(a.highpass[m] == b.highpass[m]);
  CHECK(a.lowpass == b.lowpass);
}

TEST_CASE("errors: too small, mismatched bands") {
  CHECK(error_of([] { decompose(Image(7, 16, 3), PyramidConfig{3}); }) == ErrorCode::kTooSmall);
  Pyramid p = decompose(random_image(16, 16, 3, 11), PyramidConfig{2});
  p.highpass[1] = Image(5, 8, 3);
  CHECK(error_of([&] { reconstruct(p); }) == ErrorCode::kShapeMismatch);
}
