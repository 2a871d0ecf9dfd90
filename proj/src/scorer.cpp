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

#include "msqale/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "msqale/error.hpp"
#include "msqale/nss.hpp"
#include "msqale/pyramid.hpp"
#include "msqale/trainer.hpp"
#include "parallel.hpp"

namespace msq {
namespace {

std::vector<Rect> canonical(std::span<const Rect> rects) {
  std::vector<Rect> out(rects.begin(), rects.end());
  std::sort(out.begin(), out.end(),
            [](const Rect& a, const Rect& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  return out;
}

int level_scale(const Subband& level, int pyramid_levels) {
  switch (level.kind) {
    case Subband::Kind::kImage: return 1;
    case Subband::Kind::kHighpass: return 1 << (level.index - 1);
    case Subband::Kind::kLowpass: return 1 << pyramid_levels;
  }
  return 1;
}

}  // namespace

std::vector<Rect> tile_patches(const Image& img, int patch) {
  require(patch >= 2 && patch % 2 == 0, ErrorCode::kInvalidArgument,
          "patch size must be a positive even number");
  if (img.width() < patch || img.height() < patch)
    fail(ErrorCode::kTooSmall, "image " + std::to_string(img.width()) + "x" +
                                   std::to_string(img.height()) + " smaller than patch " +
                                   std::to_string(patch));
  const int stride = patch / 2;
  std::vector<Rect> out;
  for (int y = 0; y + patch <= img.height(); y += stride)
    for (int x = 0; x + patch <= img.width(); x += stride) out.push_back({x, y, patch});
  return out;
}

int EncoderSet::feature_dim() const {
  int d = 0;
  for (const auto& w : levels) d += w.arch.embedding_dim();
  return d;
}

void EncoderSet::validate() const {
  const auto expected = Subband::all(pyramid_levels);
  require(levels.size() == expected.size(), ErrorCode::kInvalidArgument,
          "encoder set needs " + std::to_string(expected.size()) + " levels for M=" +
              std::to_string(pyramid_levels));
  for (std::size_t i = 0; i < expected.size(); ++i)
    require(levels[i].subband == expected[i], ErrorCode::kInvalidArgument,
            "encoder " + std::to_string(i) + " should be " + expected[i].name() + ", found " +
                levels[i].subband.name());
}

void EncoderSet::save(const std::filesystem::path& dir) const {
  validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kUnwritablePath, "cannot create " + dir.string());
  for (const auto& w : levels) save_weights(w, (dir / (w.subband.name() + ".msqw")).string());
}

EncoderSet EncoderSet::load(const std::filesystem::path& dir, int pyramid_levels) {
  EncoderSet set;
  set.pyramid_levels = pyramid_levels;
  for (const auto& level : Subband::all(pyramid_levels)) {
    const auto path = dir / (level.name() + ".msqw");
    if (!std::filesystem::exists(path))
      fail(ErrorCode::kMissingFile, "missing weights for level " + level.name() + ": " +
                                        path.string());
    set.levels.push_back(load_weights(path.string()));
  }
  set.validate();
  return set;
}

Rect level_rect(const Rect& rect, const Subband& level, int pyramid_levels, int band_width,
                int band_height) {
  const int s = level_scale(level, pyramid_levels);
  const int side = std::max(1, std::min({rect.side / s, band_width, band_height}));
  const int x = std::clamp(rect.x / s, 0, band_width - side);
  const int y = std::clamp(rect.y / s, 0, band_height - side);
  return {x, y, side};
}

Matrix msqale_features(const Image& img, const EncoderSet& encoders,
                       std::span<const Rect> rects) {
  encoders.validate();
  require(!rects.empty(), ErrorCode::kInvalidArgument, "no patches to describe");
  const auto ordered = canonical(rects);
  const auto levels = Subband::all(encoders.pyramid_levels);
  Pyramid pyr;
  if (encoders.pyramid_levels > 0) pyr = decompose(img, PyramidConfig{encoders.pyramid_levels});

  std::vector<Image> bands;
  for (const auto& level : levels) bands.push_back(prepare_band(select_band(pyr, img, level), level));

  const int rows = static_cast<int>(ordered.size());
  Matrix out(rows, encoders.feature_dim());
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < rows; ++r) {
    trap.run([&] {
      Eigen::Index col = 0;
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto& w = encoders.levels[l];
        const Image& band = bands[l];
        const Rect lr = level_rect(ordered[r], levels[l], encoders.pyramid_levels,
                                   band.width(), band.height());
        const Image pixels = resize_bilinear(crop_patch(band, lr.x, lr.y, lr.side).pixels,
                                             w.arch.input_side, w.arch.input_side);
        const Embedding z = encode(w, pixels);
        for (double v : z) out(r, col++) = v;
      }
    });
  }
  trap.rethrow();
  return out;
}

Matrix nss_features(const Image& img, std::span<const Rect> rects) {
  require(!rects.empty(), ErrorCode::kInvalidArgument, "no patches to describe");
  const auto ordered = canonical(rects);
  const int rows = static_cast<int>(ordered.size());
  Matrix out(rows, kNssFeatureDim);
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < rows; ++r) {
    trap.run([&] {
      const auto& rc = ordered[r];
      const auto f = nss_patch_features(crop_patch(img, rc.x, rc.y, rc.side).pixels);
      for (int j = 0; j < kNssFeatureDim; ++j) out(r, j) = f[j];
    });
  }
  trap.rethrow();
  return out;
}

std::string feature_kind_name(FeatureKind kind) {
  return kind == FeatureKind::kMsqale ? "msqale" : "nss";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "msqale") return FeatureKind::kMsqale;
  if (name == "nss") return FeatureKind::kNss;
  fail(ErrorCode::kInvalidArgument, "unknown feature kind '" + name + "'");
}

Matrix extract_features(const Image& img, std::span<const Rect> rects, FeatureKind kind,
                        const EncoderSet* encoders) {
  if (kind == FeatureKind::kNss) return nss_features(img, rects);
  require(encoders != nullptr, ErrorCode::kInvalidArgument, "msqale features need encoders");
  return msqale_features(img, *encoders, rects);
}

Matrix pristine_features(const std::vector<Image>& images,
                         const std::vector<PristinePatch>& patches, FeatureKind kind,
                         const EncoderSet* encoders) {
  require(!patches.empty(), ErrorCode::kEmptySelection, "no pristine patches");
  Matrix out;
  std::vector<std::vector<std::size_t>> by_image(images.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    require(patches[i].image < images.size(), ErrorCode::kOutOfBounds,
            "pristine patch refers to a missing image");
    by_image[patches[i].image].push_back(i);
  }
  for (std::size_t img = 0; img < images.size(); ++img) {
    if (by_image[img].empty()) continue;
    std::vector<Rect> rects;
    for (auto i : by_image[img]) rects.push_back(patches[i].patch.rect);
    const Matrix f = extract_features(images[img], rects, kind, encoders);
    if (out.size() == 0) out.resize(static_cast<Eigen::Index>(patches.size()), f.cols());
    // msqale_features returns rows in canonical (y, x) order.
    std::vector<std::size_t> order(rects.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return std::tie(rects[a].y, rects[a].x) < std::tie(rects[b].y, rects[b].x);
    });
    for (std::size_t r = 0; r < order.size(); ++r)
      out.row(static_cast<Eigen::Index>(by_image[img][order[r]])) = f.row(static_cast<Eigen::Index>(r));
  }
  return out;
}

double mvg_distance(const MvgModel& reference, const MvgModel& test) {
  const auto d = reference.mean.size();
  require(d >= 1 && test.mean.size() == d && reference.cov.rows() == d &&
              reference.cov.cols() == d && test.cov.rows() == d && test.cov.cols() == d,
          ErrorCode::kShapeMismatch, "MVG models have different dimensions");
  const Vector diff = reference.mean - test.mean;
  Matrix avg = 0.5 * (reference.cov + test.cov);
  avg = 0.5 * (avg + avg.transpose());
  const double trace = avg.trace();
  const double eps = trace > 0.0 ? 1e-6 * trace / static_cast<double>(d) : 1e-12;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(avg);
  require(eig.info() == Eigen::Success, ErrorCode::kDegenerate,
          "eigen-decomposition of the pooled covariance failed");
  const Vector proj = eig.eigenvectors().transpose() * diff;
  double q2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    q2 += proj(i) * proj(i) / std::max(eig.eigenvalues()(i), eps);
  return std::sqrt(q2);
}

QualityScore quality_score(const PristineModel& pristine, const Matrix& features) {
  require(features.rows() >= 2, ErrorCode::kInvalidArgument,
          "quality score needs at least two patches");
  if (!features.allFinite()) fail(ErrorCode::kNonFinite, "features contain non-finite values");
  const Matrix projected = pca_project_rows(pristine.pca, features);
  const MvgModel test = fit_mvg(projected);
  QualityScore s;
  s.q = mvg_distance(pristine.mvg, test);
  if (!std::isfinite(s.q)) fail(ErrorCode::kNonFinite, "quality score is not finite");
  s.patch_count = static_cast<int>(features.rows());
  s.feature_kind = pristine.feature_kind;
  return s;
}

QualityScore score_image(const Image& img, const PristineModel& pristine,
                         const EncoderSet* encoders, int patch) {
  const auto rects = tile_patches(img, patch);
  const auto kind = parse_feature_kind(pristine.feature_kind);
  if (kind == FeatureKind::kMsqale) {
    require(encoders != nullptr, ErrorCode::kInvalidArgument, "msqale scoring needs encoders");
    require(encoders->pyramid_levels == pristine.pyramid_levels, ErrorCode::kInvalidArgument,
            "encoders and pristine model disagree on the pyramid depth");
  }
  return quality_score(pristine, extract_features(img, rects, kind, encoders));
}

}  // namespace msq
