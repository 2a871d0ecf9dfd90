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

#include "msqale/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msqale/error.hpp"
#include "parallel.hpp"

namespace msq {
namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Largest square of the half [x0, x0+w) x [y0, y0+h) at a uniform offset.
Rect place_square(int x0, int y0, int w, int h, SeededRng& rng) {
  const int side = std::min(w, h);
  const int x = x0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w - side + 1)));
  const int y = y0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h - side + 1)));
  return {x, y, side};
}

std::uint64_t level_code(const Subband& level) {
  return static_cast<std::uint64_t>(level.kind) * 1000 + static_cast<std::uint64_t>(level.index);
}

}  // namespace

ViewPair make_views(int width, int height, SeededRng& rng, int min_side) {
  require(min_side >= 1, ErrorCode::kInvalidArgument, "min_side must be >= 1");
  if (std::min(width, height) < 2 * min_side)
    fail(ErrorCode::kTooSmall, "image " + std::to_string(width) + "x" + std::to_string(height) +
                                   " too small for two views of side >= " +
                                   std::to_string(min_side));
  ViewPair v;
  v.vertical_split = rng.below(2) == 0;
  if (v.vertical_split) {
    const int left = width / 2;
    v.first = place_square(0, 0, left, height, rng);
    v.second = place_square(left, 0, width - left, height, rng);
  } else {
    const int top = height / 2;
    v.first = place_square(0, 0, width, top, rng);
    v.second = place_square(0, top, width, height - top, rng);
  }
  return v;
}

ViewPair make_views(std::span<const Image> versions, SeededRng& rng, int min_side) {
  require(versions.size() >= 2, ErrorCode::kInvalidArgument, "views need K >= 2 versions");
  for (const auto& img : versions)
    require(img.width() == versions[0].width() && img.height() == versions[0].height(),
            ErrorCode::kShapeMismatch, "scene versions differ in size");
  return make_views(versions[0].width(), versions[0].height(), rng, min_side);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), ErrorCode::kShapeMismatch, "cosine: dimension mismatch");
  const double nu = norm(u), nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) fail(ErrorCode::kZeroNorm, "cosine of a zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double anchor_loss(std::span<const double> anchor, std::span<const double> positive,
                   std::span<const Embedding> negatives, double tau) {
  require(tau > 0.0, ErrorCode::kInvalidArgument, "temperature must be positive");
  const double pos = cosine_similarity(anchor, positive) / tau;
  std::vector<double> logits{pos};
  for (const auto& n : negatives) logits.push_back(cosine_similarity(anchor, n) / tau);
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  return std::max(0.0, m + std::log(sum) - pos);
}

std::string negative_mode_name(NegativeMode mode) {
  return mode == NegativeMode::kSameScene ? "same_scene" : "cross_scene";
}

NegativeMode parse_negative_mode(const std::string& name) {
  if (name == "same_scene" || name == "same") return NegativeMode::kSameScene;
  if (name == "cross_scene" || name == "cross") return NegativeMode::kCrossScene;
  fail(ErrorCode::kInvalidArgument, "unknown negative mode '" + name + "'");
}

std::vector<AnchorTerm> build_anchor_terms(int scenes, int versions, NegativeMode mode) {
  require(scenes >= 1 && versions >= 1, ErrorCode::kInvalidArgument, "empty batch");
  require(mode == NegativeMode::kSameScene || scenes >= 2, ErrorCode::kInvalidArgument,
          "cross-scene negatives need at least 2 scenes per batch");
  auto row = [versions](int n, int view, int k) { return 2 * n * versions + view * versions + k; };
  std::vector<AnchorTerm> terms;
  terms.reserve(static_cast<std::size_t>(2) * scenes * versions);
  for (int n = 0; n < scenes; ++n)
    for (int view = 0; view < 2; ++view)
      for (int k = 0; k < versions; ++k) {
        AnchorTerm t;
        t.anchor = row(n, view, k);
        t.positive = row(n, 1 - view, k);
        t.scene = n;
        t.candidates.push_back(t.positive);
        t.candidate_scenes.push_back(n);
        if (mode == NegativeMode::kSameScene) {
          for (int j = 0; j < versions; ++j)
            if (j != k) {
              t.candidates.push_back(row(n, 1 - view, j));
              t.candidate_scenes.push_back(n);
            }
        } else {
          for (int other = 0; other < scenes; ++other)
            if (other != n)
              for (int j = 0; j < versions; ++j) {
                t.candidates.push_back(row(other, 1 - view, j));
                t.candidate_scenes.push_back(other);
              }
        }
        terms.push_back(std::move(t));
      }
  return terms;
}

LossAndGrad contrastive_loss(std::span<const Embedding> table, std::span<const AnchorTerm> terms,
                             int scenes, int versions, double tau) {
  require(tau > 0.0, ErrorCode::kInvalidArgument, "temperature must be positive");
  require(scenes >= 1 && versions >= 1, ErrorCode::kInvalidArgument, "empty batch");
  require(!table.empty(), ErrorCode::kInvalidArgument, "empty embedding table");
  const std::size_t dim = table[0].size();
  std::vector<double> norms(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    require(table[i].size() == dim, ErrorCode::kShapeMismatch, "embedding dimensions differ");
    norms[i] = norm(table[i]);
    if (!(norms[i] > 0.0)) fail(ErrorCode::kZeroNorm, "zero-norm embedding in batch");
  }
  const double scale = 1.0 / (static_cast<double>(scenes) * versions);

  LossAndGrad out;
  out.grad.assign(table.size(), Embedding(dim, 0.0));
  std::vector<double> sims, probs;
  for (const auto& t : terms) {
    const auto& u = table[t.anchor];
    sims.resize(t.candidates.size());
    for (std::size_t j = 0; j < t.candidates.size(); ++j) {
      const auto& v = table[t.candidates[j]];
      sims[j] = dot(u, v) / (norms[t.anchor] * norms[t.candidates[j]]);
    }
    const double m = *std::max_element(sims.begin(), sims.end()) / tau;
    double sum = 0.0;
    probs.resize(sims.size());
    for (std::size_t j = 0; j < sims.size(); ++j) {
      probs[j] = std::exp(sims[j] / tau - m);
      sum += probs[j];
    }
    const std::size_t pos_j = static_cast<std::size_t>(
        std::find(t.candidates.begin(), t.candidates.end(), t.positive) - t.candidates.begin());
    require(pos_j < t.candidates.size(), ErrorCode::kInvalidArgument,
            "anchor term does not list its positive");
    out.loss += scale * (m + std::log(sum) - sims[pos_j] / tau);

    // dl/dS_j = (p_j - [j == pos]) / tau, then through the cosine.
    auto& ga = out.grad[t.anchor];
    const double nu = norms[t.anchor];
    for (std::size_t j = 0; j < sims.size(); ++j) {
      const double coeff = scale * (probs[j] / sum - (j == pos_j ? 1.0 : 0.0)) / tau;
      if (coeff == 0.0) continue;
      const auto& v = table[t.candidates[j]];
      const double nv = norms[t.candidates[j]];
      auto& gv = out.grad[t.candidates[j]];
      for (std::size_t d = 0; d < dim; ++d) {
        ga[d] += coeff * (v[d] / (nu * nv) - sims[j] * u[d] / (nu * nu));
        gv[d] += coeff * (u[d] / (nu * nv) - sims[j] * v[d] / (nv * nv));
      }
    }
  }
  return out;
}

BatchResult batch_loss(std::span<const SceneViews> batch, const EncoderWeights& w, double tau,
                       NegativeMode mode, bool with_grad, kernels::Exec exec) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  const int scenes = static_cast<int>(batch.size());
  const int versions = static_cast<int>(batch[0].view1.size());
  for (const auto& s : batch)
    require(static_cast<int>(s.view1.size()) == versions &&
                static_cast<int>(s.view2.size()) == versions,
            ErrorCode::kInvalidArgument, "inconsistent K across the batch");

  std::vector<const Image*> patches;
  for (const auto& s : batch) {
    for (const auto& p : s.view1) patches.push_back(&p);
    for (const auto& p : s.view2) patches.push_back(&p);
  }
  const int rows = static_cast<int>(patches.size());
  std::vector<EncoderTrace> traces(rows);
  const bool parallel = exec == kernels::Exec::kParallel;
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < rows; ++i) trap.run([&] { traces[i] = encode_traced(w, *patches[i], exec); });
  trap.rethrow();

  std::vector<Embedding> table(rows);
  for (int i = 0; i < rows; ++i) table[i] = std::move(traces[i].embedding);
  const auto terms = build_anchor_terms(scenes, versions, mode);
  auto lg = contrastive_loss(table, terms, scenes, versions, tau);

  BatchResult result;
  result.loss = lg.loss;
  if (!with_grad) return result;

  std::vector<std::vector<double>> per_patch(rows);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < rows; ++i) {
    trap.run([&] {
      traces[i].embedding = table[i];
      per_patch[i] = encode_backward(w, traces[i], lg.grad[i], exec);
    });
  }
  trap.rethrow();
  // Fixed reduction order.
  result.grad.assign(w.params.size(), 0.0);
  for (const auto& g : per_patch)
    for (std::size_t j = 0; j < g.size(); ++j) result.grad[j] += g[j];
  return result;
}

namespace {

template <typename T>
void adam_update(std::span<T> params, std::span<const double> grads, AdamState& state,
                 const AdamParams& hp) {
  require(params.size() == grads.size(), ErrorCode::kShapeMismatch,
          "adam: gradient size does not match parameters");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require(state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorCode::kShapeMismatch, "adam: state size does not match parameters");
  const long t = ++state.step;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] = static_cast<T>(params[i] - hp.lr * mhat / (std::sqrt(vhat) + hp.eps));
  }
}

}  // namespace

void adam_step(std::span<float> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp) {
  adam_update(params, grads, state, hp);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& hp) {
  adam_update(params, grads, state, hp);
}

BatchShape desk_schedule(const Subband& level) {
  switch (level.kind) {
    case Subband::Kind::kImage: return {2, 4};
    case Subband::Kind::kHighpass: return level.index <= 1 ? BatchShape{2, 4}
                                         : level.index == 2 ? BatchShape{4, 4}
                                                            : BatchShape{8, 4};
    case Subband::Kind::kLowpass: return {8, 4};
  }
  return {2, 4};
}

BatchShape full_schedule(const Subband& level) {
  switch (level.kind) {
    case Subband::Kind::kImage: return {4, 10};
    case Subband::Kind::kHighpass: return level.index <= 1 ? BatchShape{4, 10}
                                         : level.index == 2 ? BatchShape{8, 20}
                                                            : BatchShape{16, 40};
    case Subband::Kind::kLowpass: return {32, 40};
  }
  return {4, 10};
}

BatchShape TrainConfig::batch_for(const Subband& level) const {
  for (const auto& [l, shape] : schedule)
    if (l == level) return shape;
  return desk_schedule(level);
}

void TrainConfig::validate() const {
  require(tau > 0.0, ErrorCode::kInvalidArgument, "tau must be > 0");
  require(epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be >= 0");
  require(adam.lr > 0.0 && adam.eps > 0.0 && adam.beta1 >= 0.0 && adam.beta1 < 1.0 &&
              adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          ErrorCode::kInvalidArgument, "invalid Adam hyper-parameters");
  require(pyramid_levels >= 0, ErrorCode::kInvalidArgument, "pyramid levels must be >= 0");
  for (const auto& [level, shape] : schedule)
    require(shape.scenes >= 1 && shape.versions >= 2, ErrorCode::kInvalidArgument,
            "schedule for " + level.name() + " needs N >= 1 and K >= 2");
  arch.validate();
}

double TrainResult::epoch_mean(int epoch) const {
  double s = 0.0;
  int n = 0;
  for (const auto& r : losses)
    if (r.epoch == epoch) {
      s += r.loss;
      ++n;
    }
  return n ? s / n : 0.0;
}

Image prepare_band(const Image& band, const Subband& level) {
  if (level.kind != Subband::Kind::kHighpass) return band;
  Image out = band;
  for (double& v : out.data()) v = 0.5 * v + 0.5;
  return out;
}

const Image& select_band(const Pyramid& pyr, const Image& img, const Subband& level) {
  switch (level.kind) {
    case Subband::Kind::kImage: return img;
    case Subband::Kind::kHighpass:
      require(level.index >= 1 && level.index <= static_cast<int>(pyr.highpass.size()),
              ErrorCode::kInvalidArgument, "pyramid has no band " + level.name());
      return pyr.highpass[level.index - 1];
    case Subband::Kind::kLowpass:
      // A zero-level pyramid is all low-pass: G_0 is the image.
      return pyr.highpass.empty() && pyr.lowpass.empty() ? img : pyr.lowpass;
  }
  return img;
}

TrainResult train_subband(const SceneSet& corpus, const Subband& level, const TrainConfig& cfg,
                          bool keep_batch_logs) {
  cfg.validate();
  require(corpus.scene_count() > 0, ErrorCode::kInvalidArgument, "training corpus is empty");
  require(level.kind != Subband::Kind::kHighpass ||
              (level.index >= 1 && level.index <= cfg.pyramid_levels),
          ErrorCode::kInvalidArgument, level.name() + " is outside the configured pyramid");
  const BatchShape shape = cfg.batch_for(level);
  for (const auto& s : corpus.scenes)
    require(static_cast<int>(s.versions.size()) >= shape.versions, ErrorCode::kInvalidArgument,
            "scene " + s.id + " has fewer than K versions");
  require(cfg.negatives == NegativeMode::kSameScene ||
              (shape.scenes >= 2 && corpus.scene_count() >= 2),
          ErrorCode::kInvalidArgument, "cross-scene negatives need N >= 2");

  const SeededRng root(child_seed(cfg.seed, level_code(level)));

  // The band of every version, computed once.
  const int depth = level.kind == Subband::Kind::kHighpass ? level.index
                    : level.kind == Subband::Kind::kLowpass ? cfg.pyramid_levels
                                                            : 0;
  std::vector<std::vector<Image>> bands(corpus.scene_count());
  for (std::size_t s = 0; s < corpus.scene_count(); ++s) {
    const auto& versions = corpus.scenes[s].versions;
    bands[s].resize(versions.size());
    const int count = static_cast<int>(versions.size());
    detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
    for (int v = 0; v < count; ++v) {
      trap.run([&] {
        if (depth == 0) {
          bands[s][v] = prepare_band(versions[v], level);
        } else {
          const Pyramid pyr = decompose(versions[v], PyramidConfig{depth});
          bands[s][v] = prepare_band(select_band(pyr, versions[v], level), level);
        }
      });
    }
    trap.rethrow();
    for (const auto& b : bands[s])
      if (std::min(b.width(), b.height()) < 2 * cfg.arch.min_side())
        fail(ErrorCode::kTooSmall, "scene " + corpus.scenes[s].id + " is too small for " +
                                       level.name());
  }

  SeededRng init_rng = root.child(0);
  TrainResult result;
  result.weights = encoder_init(cfg.arch, init_rng, level);
  AdamState adam;
  const int side = cfg.arch.input_side;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SeededRng rng = root.child(1 + static_cast<std::uint64_t>(epoch));
    std::vector<int> order(corpus.scene_count());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<int>> batches;
    for (std::size_t i = 0; i < order.size(); i += shape.scenes)
      batches.emplace_back(order.begin() + i,
                           order.begin() + std::min(order.size(), i + shape.scenes));
    // A lone trailing scene has no cross-scene negatives; fold it back.
    if (cfg.negatives == NegativeMode::kCrossScene && batches.size() > 1 &&
        batches.back().size() == 1) {
      batches[batches.size() - 2].push_back(batches.back()[0]);
      batches.pop_back();
    }

    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<SceneViews> views(batches[b].size());
      for (std::size_t i = 0; i < batches[b].size(); ++i) {
        const auto& scene_bands = bands[batches[b][i]];
        std::vector<int> pick(scene_bands.size());
        std::iota(pick.begin(), pick.end(), 0);
        if (static_cast<int>(pick.size()) > shape.versions) {
          shuffle(pick.begin(), pick.end(), rng);
          pick.resize(shape.versions);
          std::sort(pick.begin(), pick.end());
        }
        const Image& ref = scene_bands[pick[0]];
        const ViewPair vp = make_views(ref.width(), ref.height(), rng, cfg.arch.min_side());
        for (int k : pick) {
          const Image& band = scene_bands[k];
          views[i].view1.push_back(resize_bilinear(
              crop_patch(band, vp.first.x, vp.first.y, vp.first.side).pixels, side, side));
          views[i].view2.push_back(resize_bilinear(
              crop_patch(band, vp.second.x, vp.second.y, vp.second.side).pixels, side, side));
        }
      }
      const auto br = batch_loss(views, result.weights, cfg.tau, cfg.negatives, true);
      adam_step(std::span<float>(result.weights.params), br.grad, adam, cfg.adam);
      result.losses.push_back({epoch, static_cast<int>(b), br.loss});
      if (keep_batch_logs) {
        BatchLog log;
        log.epoch = epoch;
        log.batch = static_cast<int>(b);
        for (int s : batches[b]) log.scene_ids.push_back(corpus.scenes[s].id);
        log.terms = build_anchor_terms(static_cast<int>(batches[b].size()), shape.versions,
                                       cfg.negatives);
        result.batches.push_back(std::move(log));
      }
    }
    result.weights.epoch = static_cast<std::uint32_t>(epoch + 1);
  }
  return result;
}

}  // namespace msq
