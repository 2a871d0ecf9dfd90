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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "msqale/encoder.hpp"
#include "msqale/image.hpp"
#include "msqale/pristine.hpp"

namespace msq {

/// P x P squares on a stride-P/2 grid, row-major, every position where the
/// square fits. Throws kInvalidArgument (odd or non-positive P) and
/// kTooSmall.
std::vector<Rect> tile_patches(const Image& img, int patch);

/// One trained network per level, ordered image, hp1..hpM, lowpass.
struct EncoderSet {
  int pyramid_levels = 0;
  std::vector<EncoderWeights> levels;

  int feature_dim() const;
  /// Throws kInvalidArgument when a level is missing or out of order.
  void validate() const;

  /// <dir>/<level name>.msqw for every level.
  void save(const std::filesystem::path& dir) const;
  static EncoderSet load(const std::filesystem::path& dir, int pyramid_levels);
};

/// Rectangle of a full-resolution tile mapped onto one level: coordinates
/// and side divided by the level's scale (1, 2^(m-1), or 2^M), shifted
/// inward if needed so it fits the band.
Rect level_rect(const Rect& rect, const Subband& level, int pyramid_levels, int band_width,
                int band_height);

/// One row per rectangle, rectangles taken in (y, x) order. Each row is the
/// concatenation of the per-level embeddings in EncoderSet order.
Matrix msqale_features(const Image& img, const EncoderSet& encoders,
                       std::span<const Rect> rects);

/// 36 NSS values per rectangle, (y, x) order.
Matrix nss_features(const Image& img, std::span<const Rect> rects);

enum class FeatureKind { kMsqale, kNss };

std::string feature_kind_name(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

/// Dispatch on kind; encoders may be null for kNss.
Matrix extract_features(const Image& img, std::span<const Rect> rects, FeatureKind kind,
                        const EncoderSet* encoders);

/// Feature rows for selected pristine patches, grouped per source image so
/// each image is decomposed once. Row order follows `patches`.
Matrix pristine_features(const std::vector<Image>& images,
                         const std::vector<PristinePatch>& patches, FeatureKind kind,
                         const EncoderSet* encoders);

struct QualityScore {
  double q = 0.0;
  int patch_count = 0;
  std::string feature_kind;
};

/// sqrt(d^T ((S_r + S_d)/2)^-1 d), d = mu_r - mu_d. The averaged covariance
/// is inverted through its eigen-decomposition with eigenvalues floored at
/// eps = 1e-6 trace / D, which leaves well-conditioned cases untouched.
double mvg_distance(const MvgModel& reference, const MvgModel& test);

/// Projects features through the pristine PCA, fits the test MVG, returns
/// the distance. Throws kInvalidArgument (< 2 rows), kNonFinite.
QualityScore quality_score(const PristineModel& pristine, const Matrix& features);

/// tile -> features -> quality_score. Lower Q means closer to pristine.
QualityScore score_image(const Image& img, const PristineModel& pristine,
                         const EncoderSet* encoders, int patch);

}  // namespace msq
