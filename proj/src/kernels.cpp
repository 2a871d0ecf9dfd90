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

#include "msqale/kernels.hpp"

#include <algorithm>
#include <vector>

#include "msqale/error.hpp"

namespace msq::kernels {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

// --- separable filter -------------------------------------------------

Image filter_separable_serial(const Image& img, std::span<const double> taps) {
  const int w = img.width(), h = img.height(), r = static_cast<int>(taps.size()) / 2;
  Image tmp(w, h, img.channels());
  Image out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) s += taps[t + r] * img.at(c, y, reflect_index(x + t, w));
        tmp.at(c, y, x) = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) s += taps[t + r] * tmp.at(c, reflect_index(y + t, h), x);
        out.at(c, y, x) = s;
      }
  }
  return out;
}

Image filter_separable_parallel(const Image& img, std::span<const double> taps) {
  const int w = img.width(), h = img.height(), r = static_cast<int>(taps.size()) / 2;
  const int channels = img.channels();
  Image tmp(w, h, channels);
  Image out(w, h, channels);
  // Precomputed column offsets keep the reflect out of the inner loop.
  std::vector<int> xs(static_cast<std::size_t>(w) * taps.size());
  for (int x = 0; x < w; ++x)
    for (int t = -r; t <= r; ++t) xs[x * taps.size() + (t + r)] = reflect_index(x + t, w);

  const int rows = channels * h;
#pragma omp parallel for schedule(static)
  for (int cy = 0; cy < rows; ++cy) {
    const int c = cy / h, y = cy % h;
    const double* src = &img.at(c, y, 0);
    double* dst = &tmp.at(c, y, 0);
    for (int x = 0; x < w; ++x) {
      const int* ix = &xs[x * taps.size()];
      double s = 0.0;
      for (std::size_t t = 0; t < taps.size(); ++t) s += taps[t] * src[ix[t]];
      dst[x] = s;
    }
  }
#pragma omp parallel for schedule(static)
  for (int cy = 0; cy < rows; ++cy) {
    const int c = cy / h, y = cy % h;
    double* dst = &out.at(c, y, 0);
    std::fill(dst, dst + w, 0.0);
    for (int t = -r; t <= r; ++t) {
      const double* src = &tmp.at(c, reflect_index(y + t, h), 0);
      const double k = taps[t + r];
      for (int x = 0; x < w; ++x) dst[x] += k * src[x];
    }
  }
  return out;
}

// --- convolution ------------------------------------------------------

void conv_forward_serial(const ConvShape& s, std::span<const double> in,
                         std::span<const float> wt, std::span<const float> bias,
                         std::span<double> out) {
  const int oh = s.out_height(), ow = s.out_width();
  for (int oc = 0; oc < s.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < s.in_channels; ++ic)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = 2 * oy + ky - 1, ix = 2 * ox + kx - 1;
              if (iy < 0 || iy >= s.in_height || ix < 0 || ix >= s.in_width) continue;
              acc += static_cast<double>(wt[((oc * s.in_channels + ic) * 3 + ky) * 3 + kx]) *
                     in[(static_cast<std::size_t>(ic) * s.in_height + iy) * s.in_width + ix];
            }
        out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
      }
}

void conv_forward_parallel(const ConvShape& s, std::span<const double> in,
                           std::span<const float> wt, std::span<const float> bias,
                           std::span<double> out) {
  const int oh = s.out_height(), ow = s.out_width();
  const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
  const std::size_t iplane = static_cast<std::size_t>(s.in_height) * s.in_width;
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    double* o = out.data() + oc * oplane;
    std::fill(o, o + oplane, static_cast<double>(bias[oc]));
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* src = in.data() + ic * iplane;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const double k = wt[((oc * s.in_channels + ic) * 3 + ky) * 3 + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= s.in_height) continue;
            const double* row = src + static_cast<std::size_t>(iy) * s.in_width;
            double* orow = o + static_cast<std::size_t>(oy) * ow;
            const int ox_lo = kx == 0 ? 1 : 0;
            const int ox_hi = std::min(ow, (s.in_width - kx) / 2 + 1);
            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += k * row[2 * ox + kx - 1];
          }
        }
    }
  }
}

void conv_backward_serial(const ConvShape& s, std::span<const double> in,
                          std::span<const float> wt, std::span<const double> gout,
                          std::span<double> gin, std::span<double> gw,
                          std::span<double> gb) {
  const int oh = s.out_height(), ow = s.out_width();
  if (!gin.empty()) std::fill(gin.begin(), gin.end(), 0.0);
  for (int oc = 0; oc < s.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double g = gout[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
        gb[oc] += g;
        for (int ic = 0; ic < s.in_channels; ++ic)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = 2 * oy + ky - 1, ix = 2 * ox + kx - 1;
              if (iy < 0 || iy >= s.in_height || ix < 0 || ix >= s.in_width) continue;
              const std::size_t wi = ((oc * s.in_channels + ic) * 3 + ky) * 3 + kx;
              const std::size_t ii = (static_cast<std::size_t>(ic) * s.in_height + iy) * s.in_width + ix;
              gw[wi] += g * in[ii];
              if (!gin.empty()) gin[ii] += g * static_cast<double>(wt[wi]);
            }
      }
}

void conv_backward_parallel(const ConvShape& s, std::span<const double> in,
                            std::span<const float> wt, std::span<const double> gout,
                            std::span<double> gin, std::span<double> gw,
                            std::span<double> gb) {
  const int oh = s.out_height(), ow = s.out_width();
  const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
  const std::size_t iplane = static_cast<std::size_t>(s.in_height) * s.in_width;

  // Weight and bias gradients: each output channel owns its slice.
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const double* g = gout.data() + oc * oplane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < oplane; ++i) bsum += g[i];
    gb[oc] += bsum;
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* src = in.data() + ic * iplane;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= s.in_height) continue;
            const double* row = src + static_cast<std::size_t>(iy) * s.in_width;
            const double* grow = g + static_cast<std::size_t>(oy) * ow;
            const int ox_lo = kx == 0 ? 1 : 0;
            const int ox_hi = std::min(ow, (s.in_width - kx) / 2 + 1);
            for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * row[2 * ox + kx - 1];
          }
          gw[((oc * s.in_channels + ic) * 3 + ky) * 3 + kx] += acc;
        }
    }
  }
  if (gin.empty()) return;

  // Input gradient: each input channel owns its plane.
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < s.in_channels; ++ic) {
    double* gi = gin.data() + ic * iplane;
    std::fill(gi, gi + iplane, 0.0);
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const double* g = gout.data() + oc * oplane;
      // Descending taps visit each input pixel in the serial order.
      for (int ky = 2; ky >= 0; --ky)
        for (int kx = 2; kx >= 0; --kx) {
          const double k = wt[((oc * s.in_channels + ic) * 3 + ky) * 3 + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= s.in_height) continue;
            double* row = gi + static_cast<std::size_t>(iy) * s.in_width;
            const double* grow = g + static_cast<std::size_t>(oy) * ow;
            const int ox_lo = kx == 0 ? 1 : 0;
            const int ox_hi = std::min(ow, (s.in_width - kx) / 2 + 1);
            for (int ox = ox_lo; ox < ox_hi; ++ox) row[2 * ox + kx - 1] += k * grow[ox];
          }
        }
    }
  }
}

void check_conv_spans(const ConvShape& s, std::size_t in, std::size_t wt, std::size_t bias,
                      std::size_t out) {
  require(s.in_channels > 0 && s.out_channels > 0 && s.in_height > 0 && s.in_width > 0,
          ErrorCode::kShapeMismatch, "conv shape must be positive");
  require(in == s.input_count() && wt == s.weight_count() &&
              bias == static_cast<std::size_t>(s.out_channels) && out == s.output_count(),
          ErrorCode::kShapeMismatch, "conv tensor sizes disagree with shape");
}

}  // namespace

Image filter_separable(const Image& img, std::span<const double> taps, Exec exec) {
  require(taps.size() % 2 == 1, ErrorCode::kInvalidArgument, "filter needs an odd tap count");
  if (img.empty()) return img;
  return exec == Exec::kSerial ? filter_separable_serial(img, taps)
                               : filter_separable_parallel(img, taps);
}

void conv_forward(const ConvShape& shape, std::span<const double> input,
                  std::span<const float> weight, std::span<const float> bias,
                  std::span<double> output, Exec exec) {
  check_conv_spans(shape, input.size(), weight.size(), bias.size(), output.size());
  if (exec == Exec::kSerial) {
    conv_forward_serial(shape, input, weight, bias, output);
  } else {
    conv_forward_parallel(shape, input, weight, bias, output);
  }
}

void conv_backward(const ConvShape& shape, std::span<const double> input,
                   std::span<const float> weight, std::span<const double> grad_output,
                   std::span<double> grad_input, std::span<double> grad_weight,
                   std::span<double> grad_bias, Exec exec) {
  check_conv_spans(shape, input.size(), weight.size(), grad_bias.size(), grad_output.size());
  require(grad_weight.size() == shape.weight_count(), ErrorCode::kShapeMismatch,
          "grad_weight size mismatch");
  require(grad_input.empty() || grad_input.size() == shape.input_count(),
          ErrorCode::kShapeMismatch, "grad_input size mismatch");
  if (exec == Exec::kSerial) {
    conv_backward_serial(shape, input, weight, grad_output, grad_input, grad_weight, grad_bias);
  } else {
    conv_backward_parallel(shape, input, weight, grad_output, grad_input, grad_weight, grad_bias);
  }
}

}  // namespace msq::kernels
