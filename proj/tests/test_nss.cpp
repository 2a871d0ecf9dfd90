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

#include <algorithm>
#include <cmath>

#include "msqale/corpus.hpp"
#include "msqale/kernels.hpp"
#include "msqale/nss.hpp"
#include "test_util.hpp"

using namespace msq;
using msq::testing::error_of;
using msq::testing::random_image;

namespace {

Image naive_mscn(const Image& gray) {
  double w2[7][7], sum = 0.0;
  const double s = 7.0 / 6.0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      sum += w2[i][j] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3)) / (2 * s * s));
  Image out(gray.width(), gray.height(), 1);
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x) {
      double m1 = 0.0, m2 = 0.0;
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
          const double v = gray.at(0, kernels::reflect_index(y + i - 3, gray.height()),
                                   kernels::reflect_index(x + j - 3, gray.width()));
          m1 += w2[i][j] / sum * v;
          m2 += w2[i][j] / sum * v * v;
        }
      out.at(0, y, x) = (gray.at(0, y, x) - m1) / (std::sqrt(std::abs(m2 - m1 * m1)) + 1.0 / 255);
    }
  return out;
}

std::vector<double> gaussian_samples(int n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<double> laplace_samples(int n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) {
    const double u = rng.uniform(-0.5, 0.5);
    x = (u < 0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(u));
  }
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("mscn: constant image is zero") {
  Image c(20, 12, 3);
  for (auto& v : c.data()) v = 0.6;
  for (double v : mscn(c).data()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("mscn: 9x9 input matches a naive double loop") {
  const Image g = random_image(9, 9, 1, 1);
  const Image m = mscn(g);
  CHECK(max_abs_diff(m, naive_mscn(g)) < 1e-10);
  const Image rgb = random_image(11, 9, 3, 2);
  CHECK(max_abs_diff(mscn(rgb), naive_mscn(to_luma(rgb))) < 1e-10);
}

TEST_CASE("mscn: shift invariance and near-zero mean on a natural-looking image") {
  const Image g = random_image(40, 30, 1, 3, 0.1, 0.7);
  Image s = g;
  for (auto& v : s.data()) v += 0.2;
  // Exact in real arithmetic; double rounding of the local moments leaves ~1e-13.
  CHECK(max_abs_diff(mscn(g), mscn(s)) < 1e-10);

  SeededRng rng(4);
  const Image scene = synthesize_scene(128, 128, rng);
  CHECK(std::abs(mean(mscn(scene))) < 0.05);
  CHECK(error_of([] { mscn(Image(6, 20, 1)); }) == ErrorCode::kTooSmall);
}

TEST_CASE("aggd: Gaussian samples give alpha near 2 and balanced scales") {
  const auto p = fit_aggd(gaussian_samples(100000, 5));
  CHECK(p.alpha >= 1.8);
  CHECK(p.alpha <= 2.2);
  CHECK(std::abs(p.beta_left - p.beta_right) / p.beta_left < 0.1);
  // For alpha = 2 the scale is sqrt(2) sigma.
  CHECK(p.beta_left == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("aggd: Laplacian samples give alpha near 1") {
  const auto p = fit_aggd(laplace_samples(100000, 6));
  CHECK(p.alpha >= 0.85);
  CHECK(p.alpha <= 1.15);
}

TEST_CASE("aggd: asymmetric scales show up in beta and eta") {
  auto v = gaussian_samples(50000, 7);
  for (auto& x : v)
    if (x > 0) x *= 2.0;
  const auto p = fit_aggd(v);
  CHECK(p.beta_right / p.beta_left == doctest::Approx(2.0).epsilon(0.05));
  CHECK(p.eta > 0);
}

TEST_CASE("aggd: estimation error shrinks with sample count") {
  std::vector<double> small, large;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    small.push_back(std::abs(fit_aggd(gaussian_samples(1000, 100 + seed)).alpha - 2.0));
    large.push_back(std::abs(fit_aggd(gaussian_samples(100000, 200 + seed)).alpha - 2.0));
  }
  CHECK(median(large) < median(small));
}

TEST_CASE("aggd errors") {
  CHECK(error_of([] { fit_aggd(std::vector<double>(20, 1.5)); }) == ErrorCode::kDegenerate);
  CHECK(error_of([] { fit_aggd(std::vector<double>(10, 1.0)); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("patch features: 36 finite values, deterministic, flat convention") {
  const Image p = random_image(48, 40, 3, 8);
  const auto f = nss_patch_features(p);
  REQUIRE(f.size() == kNssFeatureDim);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK(nss_patch_features(p) == f);
  Image flat(32, 32, 3);
  for (auto& v : flat.data()) v = 0.5;
  const auto ff = nss_patch_features(flat);
  CHECK(ff[0] == 10.0);
  CHECK(ff[1] == 0.0);
  CHECK(ff[18] == 10.0);
  CHECK(error_of([] { nss_patch_features(Image(31, 64, 3)); }) == ErrorCode::kTooSmall);
}

TEST_CASE("MSCN shape separates noise from blur") {
  // Additive noise pushes MSCN toward Gaussian or flatter (alpha 2.7-3.2 here);
  // blur leaves many near-zero coefficients, a peakier fit (alpha 1.5-2.1).
  int agree = 0;
  for (int s = 0; s < 6; ++s) {
    SeededRng rng(300 + s);
    const Image clean = synthesize_scene(96, 96, rng);
    const Image noisy = apply_distortion(clean, {DistortionKind::kGaussianNoise, 0.8, {}}, rng);
    const Image blurred = apply_distortion(clean, {DistortionKind::kGaussianBlur, 0.8, {}}, rng);
    if (nss_patch_features(noisy)[0] > nss_patch_features(blurred)[0]) ++agree;
  }
  CHECK(agree == 6);
}
