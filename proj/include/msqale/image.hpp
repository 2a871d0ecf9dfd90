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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace msq {

/// Planar real-valued raster. Channel c occupies
/// data[c*w*h, (c+1)*w*h), each plane row-major. RGB images hold values in
/// [0,1]; pyramid subbands may go negative.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  const double& at(int c, int y, int x) const {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<double> plane(int c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ &&
           channels_ == o.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int side = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Does not include the boundary: two rects touching along an edge are
/// disjoint.
bool overlaps(const Rect& a, const Rect& b);

struct Patch {
  Rect rect;
  Image pixels;
};

/// Rec.601 luma (0.299, 0.587, 0.114). One-channel input is returned as is.
Image to_luma(const Image& img);

/// Pixel-exact copy of the square at (x, y). Throws kOutOfBounds.
Patch crop_patch(const Image& img, int x, int y, int side);

/// Bilinear resampling with half-pixel centers and clamped borders.
Image resize_bilinear(const Image& img, int width, int height);

/// Replicates a single plane into three. Three-channel input is copied.
Image to_three_channels(const Image& img);

Image clamp01(Image img);

double max_abs_diff(const Image& a, const Image& b);
double mean(const Image& img);

struct Scene {
  std::string id;
  std::vector<Image> versions;
};

/// N scenes, K versions each. Versions within a scene share dimensions.
struct SceneSet {
  std::vector<Scene> scenes;

  std::size_t scene_count() const { return scenes.size(); }
  /// Versions per scene; throws kInvalidArgument if scenes disagree.
  std::size_t versions_per_scene() const;
  void validate(std::size_t min_versions = 2) const;
};

}  // namespace msq
