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

#include "msqale/image.hpp"

#include <algorithm>
#include <cmath>

#include "msqale/error.hpp"

namespace msq {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  require(width >= 0 && height >= 0 && channels >= 1, ErrorCode::kInvalidArgument,
          "image dimensions must be non-negative with at least one channel");
  data_.assign(plane_size() * static_cast<std::size_t>(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  require(width >= 0 && height >= 0 && channels >= 1, ErrorCode::kInvalidArgument,
          "image dimensions must be non-negative with at least one channel");
  require(data_.size() == plane_size() * static_cast<std::size_t>(channels),
          ErrorCode::kShapeMismatch, "image data length != width*height*channels");
}

bool overlaps(const Rect& a, const Rect& b) {
  return a.x < b.x + b.side && b.x < a.x + a.side && a.y < b.y + b.side &&
         b.y < a.y + a.side;
}

Image to_luma(const Image& img) {
  if (img.channels() == 1) return img;
  require(img.channels() == 3, ErrorCode::kShapeMismatch,
          "luma conversion needs 1 or 3 channels");
  Image out(img.width(), img.height(), 1);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto y = out.plane(0);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

Patch crop_patch(const Image& img, int x, int y, int side) {
  if (side < 1 || x < 0 || y < 0 || x + side > img.width() ||
      y + side > img.height()) {
    fail(ErrorCode::kOutOfBounds,
         "crop (" + std::to_string(x) + "," + std::to_string(y) + "," +
             std::to_string(side) + ") outside " + std::to_string(img.width()) +
             "x" + std::to_string(img.height()));
  }
  Image out(side, side, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int r = 0; r < side; ++r) {
      const double* src = &img.at(c, y + r, x);
      std::copy(src, src + side, &out.at(c, r, 0));
    }
  return Patch{Rect{x, y, side}, std::move(out)};
}

Image resize_bilinear(const Image& img, int width, int height) {
  require(width > 0 && height > 0 && !img.empty(), ErrorCode::kInvalidArgument,
          "resize target must be positive");
  if (width == img.width() && height == img.height()) return img;
  Image out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = (1 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
        const double bot = (1 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
        out.at(c, y, x) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image to_three_channels(const Image& img) {
  if (img.channels() == 3) return img;
  require(img.channels() == 1, ErrorCode::kShapeMismatch,
          "channel replication needs 1 or 3 channels");
  std::vector<double> data;
  data.reserve(img.size() * 3);
  for (int c = 0; c < 3; ++c) data.insert(data.end(), img.data().begin(), img.data().end());
  return Image(img.width(), img.height(), 3, std::move(data));
}

Image clamp01(Image img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

double max_abs_diff(const Image& a, const Image& b) {
  require(a.same_shape(b), ErrorCode::kShapeMismatch, "max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double mean(const Image& img) {
  if (img.empty()) return 0.0;
  double s = 0.0;
  for (double v : img.data()) s += v;
  return s / static_cast<double>(img.size());
}

std::size_t SceneSet::versions_per_scene() const {
  if (scenes.empty()) return 0;
  const std::size_t k = scenes.front().versions.size();
  for (const auto& s : scenes)
    require(s.versions.size() == k, ErrorCode::kInvalidArgument,
            "scene " + s.id + " has a different version count");
  return k;
}

void SceneSet::validate(std::size_t min_versions) const {
  require(!scenes.empty(), ErrorCode::kInvalidArgument, "scene set is empty");
  const std::size_t k = versions_per_scene();
  require(k >= min_versions, ErrorCode::kInvalidArgument,
          "need at least " + std::to_string(min_versions) + " versions per scene");
  for (const auto& s : scenes) {
    const Image& ref = s.versions.front();
    for (const auto& v : s.versions)
      require(v.width() == ref.width() && v.height() == ref.height(),
              ErrorCode::kShapeMismatch, "versions of scene " + s.id + " differ in size");
  }
}

}  // namespace msq
