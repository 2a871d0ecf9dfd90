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

#include "msqale/nss.hpp"

#include <algorithm>
#include <cmath>

#include "msqale/error.hpp"
#include "msqale/kernels.hpp"
#include "msqale/pristine.hpp"

namespace msq {
namespace {

struct RatioTable {
  std::vector<double> alpha;
  std::vector<double> ratio;
};

// r(a) = Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)), evaluated in log space.
const RatioTable& ratio_table() {
  static const RatioTable table = [] {
    RatioTable t;
    for (int i = 0; i <= 9800; ++i) {
      const double a = 0.2 + 1e-3 * i;
      t.alpha.push_back(a);
      t.ratio.push_back(std::exp(2.0 * std::lgamma(2.0 / a) - std::lgamma(1.0 / a) -
                                 std::lgamma(3.0 / a)));
    }
    return t;
  }();
  return table;
}

Image box_half(const Image& luma) {
  const int w = luma.width() / 2, h = luma.height() / 2;
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(0, y, x) = 0.25 * (luma.at(0, 2 * y, 2 * x) + luma.at(0, 2 * y, 2 * x + 1) +
                                luma.at(0, 2 * y + 1, 2 * x) + luma.at(0, 2 * y + 1, 2 * x + 1));
  return out;
}

// Flat input has no spread to fit; report the widest shape and zero scale.
AggdParams fit_or_flat(std::span<const double> samples) {
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) return AggdParams{10.0, 0.0, 0.0, 0.0};
  return fit_aggd(samples);
}

void append_scale(const Image& luma, std::vector<double>& out) {
  const Image m = mscn(luma);
  const auto base = fit_or_flat(m.data());
  out.push_back(base.alpha);
  out.push_back(0.5 * (base.beta_left * base.beta_left + base.beta_right * base.beta_right));

  const int w = m.width(), h = m.height();
  constexpr int kShifts[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};  // (dx, dy)
  for (const auto& s : kShifts) {
    std::vector<double> prod;
    prod.reserve(m.size());
    for (int y = 0; y + s[1] < h; ++y)
      for (int x = std::max(0, -s[0]); x < w && x + s[0] < w; ++x)
        prod.push_back(m.at(0, y, x) * m.at(0, y + s[1], x + s[0]));
    const auto p = fit_or_flat(prod);
    out.push_back(p.alpha);
    out.push_back(p.eta);
    out.push_back(p.beta_left * p.beta_left);
    out.push_back(p.beta_right * p.beta_right);
  }
}

}  // namespace

Image mscn(const Image& img) {
  const Image luma = to_luma(img);
  if (luma.width() < 7 || luma.height() < 7)
    fail(ErrorCode::kTooSmall, "MSCN needs at least a 7x7 image");
  const auto& taps = local_window();
  const Image mu = kernels::filter_separable(luma, taps);
  Image sq = luma;
  for (double& v : sq.data()) v *= v;
  const Image mu2 = kernels::filter_separable(sq, taps);
  Image out(luma.width(), luma.height(), 1);
  constexpr double kC = 1.0 / 255.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = mu.data()[i];
    const double sigma = std::sqrt(std::abs(mu2.data()[i] - m * m));
    out.data()[i] = (luma.data()[i] - m) / (sigma + kC);
  }
  return out;
}

AggdParams fit_aggd(std::span<const double> samples) {
  require(samples.size() >= 16, ErrorCode::kInvalidArgument, "AGGD fit needs >= 16 samples");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) fail(ErrorCode::kDegenerate, "AGGD fit on identical samples");

  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  std::size_t left_n = 0, right_n = 0;
  for (double x : samples) {
    if (x < 0) {
      left_sq += x * x;
      ++left_n;
    } else if (x > 0) {
      right_sq += x * x;
      ++right_n;
    }
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const double n = static_cast<double>(samples.size());
  double sigma_l = left_n ? std::sqrt(left_sq / left_n) : 0.0;
  double sigma_r = right_n ? std::sqrt(right_sq / right_n) : 0.0;
  // One-sided data: treat as symmetric about zero.
  if (sigma_l == 0.0) sigma_l = sigma_r;
  if (sigma_r == 0.0) sigma_r = sigma_l;

  const double gamma_hat = sigma_l / sigma_r;
  const double r_hat = (abs_sum / n) * (abs_sum / n) / (sq_sum / n);
  const double g2 = gamma_hat * gamma_hat;
  const double big_r = r_hat * (gamma_hat * g2 + 1.0) * (gamma_hat + 1.0) / ((g2 + 1.0) * (g2 + 1.0));

  const auto& t = ratio_table();
  std::size_t best = 0;
  double best_err = std::abs(t.ratio[0] - big_r);
  for (std::size_t i = 1; i < t.ratio.size(); ++i) {
    const double e = std::abs(t.ratio[i] - big_r);
    if (e < best_err) {
      best_err = e;
      best = i;
    }
  }
  AggdParams p;
  p.alpha = t.alpha[best];
  const double scale = std::exp(0.5 * (std::lgamma(1.0 / p.alpha) - std::lgamma(3.0 / p.alpha)));
  p.beta_left = sigma_l * scale;
  p.beta_right = sigma_r * scale;
  p.eta = (p.beta_right - p.beta_left) *
          std::exp(std::lgamma(2.0 / p.alpha) - std::lgamma(1.0 / p.alpha));
  return p;
}

std::vector<double> nss_patch_features(const Image& patch) {
  if (patch.width() < 32 || patch.height() < 32)
    fail(ErrorCode::kTooSmall, "NSS features need at least a 32x32 patch");
  const Image luma = to_luma(patch);
  std::vector<double> out;
  out.reserve(kNssFeatureDim);
  append_scale(luma, out);
  append_scale(box_half(luma), out);
  for (double v : out)
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "NSS feature is not finite");
  return out;
}

}  // namespace msq
