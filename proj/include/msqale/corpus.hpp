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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msqale/image.hpp"
#include "msqale/rng.hpp"

namespace msq {

enum class DistortionKind {
  kGammaUnder,
  kGammaOver,
  kGaussianNoise,
  kPoissonLikeNoise,
  kGaussianBlur,
  kColorCast,
  kDesaturate,
  kHistEqualize,
  kClaheLike,
};

inline constexpr int kDistortionKindCount = 9;

std::string_view kind_name(DistortionKind kind);
/// Throws kInvalidArgument for unknown names.
DistortionKind parse_kind(std::string_view name);
/// Parametric kinds reduce to the identity at severity 0.
bool is_parametric(DistortionKind kind);

/// Severity in [0,1] selects the default parameters; explicit entries in
/// `params` override them. Parameter names and ranges:
///
///   gamma_under         exponent in [1, 3.5]          (1 + 2.5 s)
///   gamma_over          exponent in [0.3, 1]          (1 - 0.7 s)
///                       gain in [1, 1.8]              (1 + 0.8 s)
///   gaussian_noise      sigma in [0, 0.12]            (0.12 s)
///   poisson_like_noise  scale in [0, 0.12]            (0.12 s), sd = scale*sqrt(x)
///   gaussian_blur       sigma in [0, 4] px            (4 s)
///   color_cast          gain in [1, 1.5]              (1 + 0.5 s)
///                       channel in {0,1,2}            (drawn from the rng)
///   desaturate          amount in [0, 1]              (s)
///   hist_equalize       -                             (always applied)
///   clahe_like          clip in [0.01, 0.05]          (0.01 (1 + 4 s)), 4x4 tiles
struct DistortionSpec {
  DistortionKind kind = DistortionKind::kGaussianNoise;
  double severity = 0.0;
  std::map<std::string, double> params;

  friend bool operator==(const DistortionSpec&, const DistortionSpec&) = default;
};

/// Parameters actually used, defaults filled in from severity.
/// Throws kInvalidArgument when a value is outside its documented range.
std::map<std::string, double> resolve_params(const DistortionSpec& spec);

/// Output clamped to [0,1]. Deterministic given the rng state.
Image apply_distortion(const Image& img, const DistortionSpec& spec, SeededRng& rng);

using DistortionChain = std::vector<DistortionSpec>;

Image apply_chain(const Image& img, const DistortionChain& chain, SeededRng& rng);

struct VersionRecipe {
  DistortionChain chain;  // empty chain: the unmodified well-lit image
  std::uint64_t seed = 0;
};

struct SceneRecipe {
  std::string scene_id;
  std::string base;  // file name or synthetic tag of the well-lit image
  std::vector<VersionRecipe> versions;
};

inline constexpr int kManifestFormatVersion = 1;

struct CorpusManifest {
  int format_version = kManifestFormatVersion;
  std::uint64_t seed = 0;
  int versions_per_scene = 0;
  std::vector<SceneRecipe> scenes;

  std::string to_json() const;
  /// Throws kCorruptData / kVersionMismatch.
  static CorpusManifest from_json(std::string_view text);
};

struct TrainingCorpus {
  SceneSet scenes;
  CorpusManifest manifest;
};

/// Per scene: version 0 darkened (gamma_under, severity in [0.8, 1]),
/// version 1 the unmodified base, versions 2..K-1 chains of 1-3 distinct
/// kinds with severities in [0.25, 1]. Scene i uses rng child i of `seed`.
TrainingCorpus build_training_corpus(const std::vector<Image>& base_images, int versions,
                                     std::uint64_t seed,
                                     const std::vector<std::string>& base_names = {});

/// Rebuilds a scene set from a manifest and the same base images.
SceneSet regenerate_corpus(const std::vector<Image>& base_images,
                           const CorpusManifest& manifest);

/// levels images with severity i/(levels-1). Element 0 is img itself. All
/// levels share one noise draw (same seed), so severity is the only change.
std::vector<Image> distortion_ladder(const Image& img, DistortionKind kind, int levels,
                                     std::uint64_t seed = 0);

/// Procedural stand-in for a well-lit photograph: a smooth two-color
/// background, overlapping soft-edged colored shapes, and multi-octave
/// texture. Values stay inside [0.02, 0.98].
Image synthesize_scene(int width, int height, SeededRng& rng);

/// Writes <root>/<scene_id>/<version_idx>.png and <root>/manifest.json.
void write_corpus(const TrainingCorpus& corpus, const std::filesystem::path& root);

/// Loads what write_corpus produced. Throws kMissingFile, kCorruptData.
TrainingCorpus read_corpus(const std::filesystem::path& root);

}  // namespace msq
