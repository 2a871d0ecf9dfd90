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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msqale/encoder.hpp"
#include "msqale/image.hpp"
#include "msqale/pyramid.hpp"
#include "msqale/rng.hpp"

namespace msq {

/// Two disjoint squares, one in each half of the image. The same rectangles
/// are cropped from every version of a scene.
struct ViewPair {
  Rect first;
  Rect second;
  bool vertical_split = true;  // true: left/right halves
};

/// Split axis uniform; each half contributes its largest inscribed square at
/// an offset drawn uniformly over all valid placements inside that half.
/// Throws kTooSmall if min(width, height) < 2 * min_side.
ViewPair make_views(int width, int height, SeededRng& rng, int min_side = 1);
ViewPair make_views(std::span<const Image> versions, SeededRng& rng, int min_side = 1);

/// u.v / (|u||v|). Throws kZeroNorm.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// -log( exp(S(a,p)/tau) / (exp(S(a,p)/tau) + sum_j exp(S(a,n_j)/tau)) ),
/// evaluated with max-subtraction. With no negatives the loss is 0.
/// Throws kZeroNorm, kInvalidArgument (tau <= 0).
double anchor_loss(std::span<const double> anchor, std::span<const double> positive,
                   std::span<const Embedding> negatives, double tau);

enum class NegativeMode {
  kSameScene,   // other versions of the anchor's scene, opposite view
  kCrossScene,  // every opposite-view patch of the other scenes in the batch
};

std::string negative_mode_name(NegativeMode mode);
NegativeMode parse_negative_mode(const std::string& name);

/// One anchor term of the loss: anchor index, positive index, and the full
/// candidate list (positive included) into the batch embedding table.
struct AnchorTerm {
  int anchor = 0;
  int positive = 0;
  int scene = 0;
  std::vector<int> candidates;
  std::vector<int> candidate_scenes;
};

/// Embedding table layout for N scenes and K versions: scene n occupies
/// rows [2nK, 2nK + K) for view 1 and [2nK + K, 2(n+1)K) for view 2, row
/// offset k is version k.
std::vector<AnchorTerm> build_anchor_terms(int scenes, int versions, NegativeMode mode);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<Embedding> grad;  // d loss / d embedding, one per table row
};

/// (1 / (N K)) * sum over every anchor term. Both views of every patch act
/// as anchors.
LossAndGrad contrastive_loss(std::span<const Embedding> table,
                             std::span<const AnchorTerm> terms, int scenes, int versions,
                             double tau);

/// Patches of one scene: view1[k], view2[k] for version k.
struct SceneViews {
  std::vector<Image> view1;
  std::vector<Image> view2;
};

struct BatchResult {
  double loss = 0.0;
  std::vector<double> grad;  // parameter gradient, empty unless requested
};

/// Encodes all 2NK patches and evaluates the batch loss.
BatchResult batch_loss(std::span<const SceneViews> batch, const EncoderWeights& w, double tau,
                       NegativeMode mode = NegativeMode::kSameScene, bool with_grad = false,
                       kernels::Exec exec = kernels::Exec::kParallel);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard bias-corrected Adam. Increments state.step, then updates with
/// t = state.step. Throws kShapeMismatch.
void adam_step(std::span<float> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp);
/// Double-precision variant used by tests and scalar references.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp);

/// (scenes per batch, versions per scene) for one level.
struct BatchShape {
  int scenes = 2;
  int versions = 4;
};

/// image, hp1: (2,4); hp2: (4,4); hp3 and deeper, lowpass: (8,4).
BatchShape desk_schedule(const Subband& level);
/// image, hp1: (4,10); hp2: (8,20); hp3: (16,40); lowpass: (32,40).
BatchShape full_schedule(const Subband& level);

struct TrainConfig {
  double tau = 0.1;
  int epochs = 110;
  AdamParams adam;
  int pyramid_levels = 3;
  EncoderArch arch;
  std::vector<std::pair<Subband, BatchShape>> schedule;  // overrides desk_schedule
  NegativeMode negatives = NegativeMode::kSameScene;
  std::uint64_t seed = 1;

  BatchShape batch_for(const Subband& level) const;
  void validate() const;
};

struct LossRecord {
  int epoch = 0;
  int batch = 0;
  double loss = 0.0;
};

/// Which scenes each anchor of a batch compared against.
struct BatchLog {
  int epoch = 0;
  int batch = 0;
  std::vector<std::string> scene_ids;
  std::vector<AnchorTerm> terms;
};

struct TrainResult {
  EncoderWeights weights;
  std::vector<LossRecord> losses;
  std::vector<BatchLog> batches;  // filled when keep_batch_logs is set

  /// Mean batch loss of one epoch (0-based).
  double epoch_mean(int epoch) const;
};

/// Rescales a band into the encoder's input contract: high-pass values
/// map as 0.5 v + 0.5, image and low-pass bands pass through.
Image prepare_band(const Image& band, const Subband& level);

/// Selects the level from a decomposition.
const Image& select_band(const Pyramid& pyr, const Image& img, const Subband& level);

/// Trains one level's encoder. Scene order is reshuffled every epoch from a
/// per-epoch child seed; scenes with more than K versions use a random
/// subset of K. Gradients are reduced in a fixed order, so results do not
/// depend on the OpenMP thread count.
TrainResult train_subband(const SceneSet& corpus, const Subband& level, const TrainConfig& cfg,
                          bool keep_batch_logs = false);

}  // namespace msq
