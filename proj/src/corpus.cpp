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

#include "msqale/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "msqale/error.hpp"
#include "msqale/image_io.hpp"
#include "msqale/kernels.hpp"
#include "parallel.hpp"

namespace msq {
namespace {

constexpr std::array<std::string_view, kDistortionKindCount> kKindNames = {
    "gamma_under", "gamma_over", "gaussian_noise", "poisson_like_noise", "gaussian_blur",
    "color_cast",  "desaturate", "hist_equalize",  "clahe_like"};

double param_or(const DistortionSpec& spec, const char* name, double fallback) {
  auto it = spec.params.find(name);
  return it == spec.params.end() ? fallback : it->second;
}

void check_range(double v, double lo, double hi, std::string_view kind, const char* name) {
  if (!(v >= lo && v <= hi))
    fail(ErrorCode::kInvalidArgument, std::string(kind) + "." + name + "=" +
                                          std::to_string(v) + " outside [" +
                                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Rescales RGB so that luma follows `mapped`. Pixels with ~zero luma become
// gray at the mapped level.
Image apply_luma_map(const Image& img, const Image& luma, const Image& mapped) {
  Image out = img;
  const std::size_t n = img.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    const double y = luma.data()[i];
    const double target = mapped.data()[i];
    for (int c = 0; c < img.channels(); ++c) {
      double& v = out.data()[c * n + i];
      v = y > 1e-6 ? v * target / y : target;
    }
  }
  return out;
}

Image hist_equalize(const Image& img) {
  constexpr int kBins = 256;
  const Image luma = to_luma(img);
  std::array<double, kBins> cdf{};
  for (double y : luma.data())
    cdf[std::clamp(static_cast<int>(y * kBins), 0, kBins - 1)] += 1.0;
  for (int b = 1; b < kBins; ++b) cdf[b] += cdf[b - 1];
  const double total = cdf[kBins - 1];
  const double first = *std::find_if(cdf.begin(), cdf.end(), [](double c) { return c > 0; });
  Image mapped(luma.width(), luma.height(), 1);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    const int b = std::clamp(static_cast<int>(luma.data()[i] * kBins), 0, kBins - 1);
    mapped.data()[i] = total > first ? (cdf[b] - first) / (total - first) : luma.data()[i];
  }
  return apply_luma_map(img, luma, mapped);
}

Image clahe_like(const Image& img, double clip) {
  constexpr int kBins = 64;
  constexpr int kTiles = 4;
  const Image luma = to_luma(img);
  const int w = luma.width(), h = luma.height();
  const int tw = std::max(1, (w + kTiles - 1) / kTiles);
  const int th = std::max(1, (h + kTiles - 1) / kTiles);
  const int nx = (w + tw - 1) / tw, ny = (h + th - 1) / th;
  auto bin_of = [](double y) { return std::clamp(static_cast<int>(y * kBins), 0, kBins - 1); };

  // Per-tile clipped-histogram equalization curves.
  std::vector<std::array<double, kBins>> curves(static_cast<std::size_t>(nx) * ny);
  for (int ty = 0; ty < ny; ++ty)
    for (int tx = 0; tx < nx; ++tx) {
      std::array<double, kBins> hist{};
      int count = 0;
      for (int y = ty * th; y < std::min(h, (ty + 1) * th); ++y)
        for (int x = tx * tw; x < std::min(w, (tx + 1) * tw); ++x) {
          hist[bin_of(luma.at(0, y, x))] += 1.0;
          ++count;
        }
      const double limit = std::max(1.0, clip * count);
      double excess = 0.0;
      for (double& v : hist)
        if (v > limit) {
          excess += v - limit;
          v = limit;
        }
      for (double& v : hist) v += excess / kBins;
      auto& curve = curves[static_cast<std::size_t>(ty) * nx + tx];
      double acc = 0.0;
      for (int b = 0; b < kBins; ++b) {
        acc += hist[b];
        curve[b] = acc / count;
      }
    }

  Image mapped(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const double gy = std::clamp((y + 0.5) / th - 0.5, 0.0, ny - 1.0);
    const int y0 = static_cast<int>(gy), y1 = std::min(y0 + 1, ny - 1);
    const double wy = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = std::clamp((x + 0.5) / tw - 0.5, 0.0, nx - 1.0);
      const int x0 = static_cast<int>(gx), x1 = std::min(x0 + 1, nx - 1);
      const double wx = gx - x0;
      const int b = bin_of(luma.at(0, y, x));
      auto curve = [&](int cx, int cy) { return curves[static_cast<std::size_t>(cy) * nx + cx][b]; };
      mapped.at(0, y, x) = (1 - wy) * ((1 - wx) * curve(x0, y0) + wx * curve(x1, y0)) +
                           wy * ((1 - wx) * curve(x0, y1) + wx * curve(x1, y1));
    }
  }
  return apply_luma_map(img, luma, mapped);
}

nlohmann::json spec_to_json(const DistortionSpec& s) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : s.params) params[k] = v;
  return {{"kind", kind_name(s.kind)}, {"severity", s.severity}, {"params", params}};
}

DistortionSpec spec_from_json(const nlohmann::json& j) {
  DistortionSpec s;
  s.kind = parse_kind(j.at("kind").get<std::string>());
  s.severity = j.at("severity").get<double>();
  for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
  return s;
}

}  // namespace

std::string_view kind_name(DistortionKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

DistortionKind parse_kind(std::string_view name) {
  for (int i = 0; i < kDistortionKindCount; ++i)
    if (kKindNames[i] == name) return static_cast<DistortionKind>(i);
  fail(ErrorCode::kInvalidArgument, "unknown distortion kind '" + std::string(name) + "'");
}

bool is_parametric(DistortionKind kind) {
  return kind != DistortionKind::kHistEqualize && kind != DistortionKind::kClaheLike;
}

std::map<std::string, double> resolve_params(const DistortionSpec& spec) {
  const double s = spec.severity;
  const auto name = kind_name(spec.kind);
  check_range(s, 0.0, 1.0, name, "severity");
  std::map<std::string, double> p;
  switch (spec.kind) {
    case DistortionKind::kGammaUnder:
      p["exponent"] = param_or(spec, "exponent", 1.0 + 2.5 * s);
      check_range(p["exponent"], 1.0, 3.5, name, "exponent");
      break;
    case DistortionKind::kGammaOver:
      p["exponent"] = param_or(spec, "exponent", 1.0 - 0.7 * s);
      p["gain"] = param_or(spec, "gain", 1.0 + 0.8 * s);
      check_range(p["exponent"], 0.3, 1.0, name, "exponent");
      check_range(p["gain"], 1.0, 1.8, name, "gain");
      break;
    case DistortionKind::kGaussianNoise:
      p["sigma"] = param_or(spec, "sigma", 0.12 * s);
      check_range(p["sigma"], 0.0, 0.12, name, "sigma");
      break;
    case DistortionKind::kPoissonLikeNoise:
      p["scale"] = param_or(spec, "scale", 0.12 * s);
      check_range(p["scale"], 0.0, 0.12, name, "scale");
      break;
    case DistortionKind::kGaussianBlur:
      p["sigma"] = param_or(spec, "sigma", 4.0 * s);
      check_range(p["sigma"], 0.0, 4.0, name, "sigma");
      break;
    case DistortionKind::kColorCast:
      p["gain"] = param_or(spec, "gain", 1.0 + 0.5 * s);
      check_range(p["gain"], 1.0, 1.5, name, "gain");
      if (auto it = spec.params.find("channel"); it != spec.params.end()) {
        check_range(it->second, 0.0, 2.0, name, "channel");
        require(it->second == std::floor(it->second), ErrorCode::kInvalidArgument,
                "color_cast.channel must be an integer");
        p["channel"] = it->second;
      }
      break;
    case DistortionKind::kDesaturate:
      p["amount"] = param_or(spec, "amount", s);
      check_range(p["amount"], 0.0, 1.0, name, "amount");
      break;
    case DistortionKind::kHistEqualize:
      break;
    case DistortionKind::kClaheLike:
      p["clip"] = param_or(spec, "clip", 0.01 * (1.0 + 4.0 * s));
      check_range(p["clip"], 0.01, 0.05, name, "clip");
      break;
  }
  for (const auto& [k, v] : spec.params)
    require(p.count(k) == 1, ErrorCode::kInvalidArgument,
            "unknown parameter '" + k + "' for " + std::string(name));
  return p;
}

Image apply_distortion(const Image& img, const DistortionSpec& spec, SeededRng& rng) {
  require(img.channels() == 3, ErrorCode::kShapeMismatch, "distortions need an RGB image");
  auto p = resolve_params(spec);
  Image out = img;
  auto& d = out.data();
  switch (spec.kind) {
    case DistortionKind::kGammaUnder:
      if (p["exponent"] == 1.0) break;
      for (double& v : d) v = std::pow(std::max(v, 0.0), p["exponent"]);
      break;
    case DistortionKind::kGammaOver:
      if (p["exponent"] == 1.0 && p["gain"] == 1.0) break;
      for (double& v : d) v = p["gain"] * std::pow(std::max(v, 0.0), p["exponent"]);
      break;
    case DistortionKind::kGaussianNoise:
      if (p["sigma"] == 0.0) break;
      for (double& v : d) v += p["sigma"] * rng.normal();
      break;
    case DistortionKind::kPoissonLikeNoise:
      if (p["scale"] == 0.0) break;
      for (double& v : d) v += p["scale"] * std::sqrt(std::max(v, 0.0)) * rng.normal();
      break;
    case DistortionKind::kGaussianBlur:
      if (p["sigma"] == 0.0) break;
      out = kernels::filter_separable(img, gaussian_taps(p["sigma"]));
      break;
    case DistortionKind::kColorCast: {
      const int channel = p.count("channel") ? static_cast<int>(p["channel"])
                                             : static_cast<int>(rng.below(3));
      if (p["gain"] == 1.0) break;
      for (double& v : out.plane(channel)) v *= p["gain"];
      break;
    }
    case DistortionKind::kDesaturate: {
      const double a = p["amount"];
      if (a == 0.0) break;
      const Image luma = to_luma(img);
      for (int c = 0; c < 3; ++c) {
        auto plane = out.plane(c);
        for (std::size_t i = 0; i < plane.size(); ++i)
          plane[i] = (1.0 - a) * plane[i] + a * luma.data()[i];
      }
      break;
    }
    case DistortionKind::kHistEqualize:
      out = hist_equalize(img);
      break;
    case DistortionKind::kClaheLike:
      out = clahe_like(img, p["clip"]);
      break;
  }
  return clamp01(std::move(out));
}

Image apply_chain(const Image& img, const DistortionChain& chain, SeededRng& rng) {
  Image out = img;
  for (const auto& spec : chain) out = apply_distortion(out, spec, rng);
  return out;
}

std::string CorpusManifest::to_json() const {
  nlohmann::json j;
  j["format_version"] = format_version;
  j["seed"] = seed;
  j["versions_per_scene"] = versions_per_scene;
  j["scenes"] = nlohmann::json::array();
  for (const auto& s : scenes) {
    nlohmann::json js{{"scene_id", s.scene_id}, {"base", s.base}};
    js["versions"] = nlohmann::json::array();
    for (const auto& v : s.versions) {
      nlohmann::json chain = nlohmann::json::array();
      for (const auto& spec : v.chain) chain.push_back(spec_to_json(spec));
      js["versions"].push_back({{"seed", v.seed}, {"chain", chain}});
    }
    j["scenes"].push_back(std::move(js));
  }
  return j.dump(2) + "\n";
}

CorpusManifest CorpusManifest::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptData, std::string("manifest parse error: ") + e.what());
  }
  CorpusManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kManifestFormatVersion)
      fail(ErrorCode::kVersionMismatch,
           "manifest format_version " + std::to_string(m.format_version) + " unsupported");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.versions_per_scene = j.at("versions_per_scene").get<int>();
    for (const auto& js : j.at("scenes")) {
      SceneRecipe s;
      s.scene_id = js.at("scene_id").get<std::string>();
      s.base = js.at("base").get<std::string>();
      for (const auto& jv : js.at("versions")) {
        VersionRecipe v;
        v.seed = jv.at("seed").get<std::uint64_t>();
        for (const auto& spec : jv.at("chain")) v.chain.push_back(spec_from_json(spec));
        s.versions.push_back(std::move(v));
      }
      m.scenes.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptData, std::string("manifest field error: ") + e.what());
  }
  return m;
}

TrainingCorpus build_training_corpus(const std::vector<Image>& base_images, int versions,
                                     std::uint64_t seed,
                                     const std::vector<std::string>& base_names) {
  require(versions >= 2, ErrorCode::kInvalidArgument, "training corpus needs K >= 2");
  require(!base_images.empty(), ErrorCode::kInvalidArgument, "no base images");
  require(base_names.empty() || base_names.size() == base_images.size(),
          ErrorCode::kInvalidArgument, "base_names must match base_images");

  CorpusManifest manifest;
  manifest.seed = seed;
  manifest.versions_per_scene = versions;
  for (std::size_t i = 0; i < base_images.size(); ++i) {
    SeededRng rng = SeededRng(seed).child(i);
    SceneRecipe scene;
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03zu", i);
    scene.scene_id = id;
    scene.base = base_names.empty() ? scene.scene_id : base_names[i];

    DistortionSpec dark{DistortionKind::kGammaUnder, rng.uniform(0.8, 1.0), {}};
    dark.params = resolve_params(dark);
    scene.versions.push_back({{dark}, rng.next_u64()});
    scene.versions.push_back({{}, rng.next_u64()});

    for (int k = 2; k < versions; ++k) {
      std::array<int, kDistortionKindCount> kinds{};
      for (int j = 0; j < kDistortionKindCount; ++j) kinds[j] = j;
      shuffle(kinds.begin(), kinds.end(), rng);
      const int length = 1 + static_cast<int>(rng.below(3));
      VersionRecipe v;
      for (int j = 0; j < length; ++j) {
        DistortionSpec spec{static_cast<DistortionKind>(kinds[j]), rng.uniform(0.25, 1.0), {}};
        spec.params = resolve_params(spec);
        if (spec.kind == DistortionKind::kColorCast)
          spec.params["channel"] = static_cast<double>(rng.below(3));
        v.chain.push_back(std::move(spec));
      }
      v.seed = rng.next_u64();
      scene.versions.push_back(std::move(v));
    }
    manifest.scenes.push_back(std::move(scene));
  }
  return {regenerate_corpus(base_images, manifest), std::move(manifest)};
}

SceneSet regenerate_corpus(const std::vector<Image>& base_images,
                           const CorpusManifest& manifest) {
  require(manifest.scenes.size() == base_images.size(), ErrorCode::kInvalidArgument,
          "manifest scene count does not match base images");
  SceneSet set;
  set.scenes.resize(manifest.scenes.size());
  const int n = static_cast<int>(manifest.scenes.size());
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    trap.run([&] {
      const auto& recipe = manifest.scenes[i];
      Scene scene;
      scene.id = recipe.scene_id;
      for (const auto& v : recipe.versions) {
        SeededRng rng(v.seed);
        scene.versions.push_back(apply_chain(base_images[i], v.chain, rng));
      }
      set.scenes[i] = std::move(scene);
    });
  }
  trap.rethrow();
  return set;
}

std::vector<Image> distortion_ladder(const Image& img, DistortionKind kind, int levels,
                                     std::uint64_t seed) {
  require(levels >= 2, ErrorCode::kInvalidArgument, "a ladder needs at least 2 levels");
  require(is_parametric(kind), ErrorCode::kInvalidArgument,
          std::string(kind_name(kind)) + " has no severity ladder");
  std::vector<Image> out;
  out.reserve(levels);
  for (int i = 0; i < levels; ++i) {
    SeededRng rng(seed);
    const DistortionSpec spec{kind, static_cast<double>(i) / (levels - 1), {}};
    out.push_back(i == 0 ? img : apply_distortion(img, spec, rng));
  }
  return out;
}

Image synthesize_scene(int width, int height, SeededRng& rng) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "scene size must be positive");
  Image img(width, height, 3);
  auto random_color = [&rng] {
    // Saturated hue wheel color with random value.
    const double hue = rng.uniform() * 6.0;
    const double sat = rng.uniform(0.45, 1.0);
    const double val = rng.uniform(0.35, 1.0);
    const int sector = static_cast<int>(hue) % 6;
    const double f = hue - std::floor(hue);
    const double p = val * (1 - sat), q = val * (1 - sat * f), t = val * (1 - sat * (1 - f));
    static constexpr int kPerm[6][3] = {{0, 3, 1}, {2, 0, 1}, {1, 0, 3},
                                        {1, 2, 0}, {3, 1, 0}, {0, 1, 2}};
    const double vals[4] = {val, p, q, t};
    return std::array<double, 3>{vals[kPerm[sector][0]], vals[kPerm[sector][1]],
                                 vals[kPerm[sector][2]]};
  };

  // Background gradient.
  const auto c0 = random_color(), c1 = random_color();
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double dx = std::cos(angle), dy = std::sin(angle);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double t = 0.5 + 0.5 * ((x / double(width) - 0.5) * dx + (y / double(height) - 0.5) * dy);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = (1 - t) * c0[c] + t * c1[c];
    }

  // Shapes: ellipses and rotated rectangles with a 1-2 px soft edge.
  const int shapes = 14 + static_cast<int>(rng.below(14));
  const double size = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    const auto col = random_color();
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double rx = rng.uniform(0.04, 0.28) * size, ry = rng.uniform(0.04, 0.28) * size;
    const double rot = rng.uniform(0.0, std::numbers::pi);
    const bool ellipse = rng.uniform() < 0.5;
    const double alpha = rng.uniform(0.7, 1.0);
    const double edge = rng.uniform(0.6, 2.0);
    const double stripe_freq = rng.uniform() < 0.35 ? rng.uniform(0.15, 0.6) : 0.0;
    const double cr = std::cos(rot), sr = std::sin(rot);
    const int x0 = std::max(0, static_cast<int>(cx - rx - ry - 3));
    const int x1 = std::min(width, static_cast<int>(cx + rx + ry + 3));
    const int y0 = std::max(0, static_cast<int>(cy - rx - ry - 3));
    const int y1 = std::min(height, static_cast<int>(cy + rx + ry + 3));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double u = (x - cx) * cr + (y - cy) * sr;
        const double v = -(x - cx) * sr + (y - cy) * cr;
        // Signed distance approximation in pixels (negative inside).
        double dist;
        if (ellipse) {
          const double r = std::sqrt((u * u) / (rx * rx) + (v * v) / (ry * ry));
          dist = (r - 1.0) * std::min(rx, ry);
        } else {
          dist = std::max(std::abs(u) - rx, std::abs(v) - ry);
        }
        const double cover = alpha * std::clamp(0.5 - dist / edge, 0.0, 1.0);
        if (cover <= 0.0) continue;
        const double stripe = stripe_freq > 0 ? 0.85 + 0.15 * std::sin(u * stripe_freq * 2.0) : 1.0;
        for (int c = 0; c < 3; ++c)
          img.at(c, y, x) = (1 - cover) * img.at(c, y, x) + cover * col[c] * stripe;
      }
  }

  // Multi-octave value noise, 1/f amplitudes, multiplicative.
  Image tex(width, height, 1);
  double amp = 1.0;
  for (int cell = 32; cell >= 2; cell /= 2, amp *= 0.6) {
    const int gw = width / cell + 2, gh = height / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (double& g : grid) g = rng.uniform(-1.0, 1.0);
    for (int y = 0; y < height; ++y) {
      const double fy = static_cast<double>(y) / cell;
      const int iy = static_cast<int>(fy);
      const double wy = fy - iy;
      for (int x = 0; x < width; ++x) {
        const double fx = static_cast<double>(x) / cell;
        const int ix = static_cast<int>(fx);
        const double wx = fx - ix;
        auto g = [&](int a, int b) { return grid[static_cast<std::size_t>(b) * gw + a]; };
        tex.at(0, y, x) += amp * ((1 - wy) * ((1 - wx) * g(ix, iy) + wx * g(ix + 1, iy)) +
                                  wy * ((1 - wx) * g(ix, iy + 1) + wx * g(ix + 1, iy + 1)));
      }
    }
  }
  const double tex_strength = rng.uniform(0.06, 0.14);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < img.plane_size(); ++i)
      img.plane(c)[i] *= 1.0 + tex_strength * tex.data()[i];

  for (double& v : img.data()) v = 0.02 + 0.96 * std::clamp(v, 0.0, 1.0);
  return img;
}

void write_corpus(const TrainingCorpus& corpus, const std::filesystem::path& root) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) fail(ErrorCode::kUnwritablePath, "cannot create " + root.string());
  for (const auto& scene : corpus.scenes.scenes) {
    const auto dir = root / scene.id;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kUnwritablePath, "cannot create " + dir.string());
    for (std::size_t k = 0; k < scene.versions.size(); ++k)
      save_image(scene.versions[k], dir / (std::to_string(k) + ".png"));
  }
  std::ofstream out(root / "manifest.json", std::ios::binary);
  if (!out) fail(ErrorCode::kUnwritablePath, "cannot write manifest in " + root.string());
  out << corpus.manifest.to_json();
}

TrainingCorpus read_corpus(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.json", std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, "no manifest.json in " + root.string());
  std::stringstream text;
  text << in.rdbuf();
  TrainingCorpus corpus;
  corpus.manifest = CorpusManifest::from_json(text.str());
  for (const auto& recipe : corpus.manifest.scenes) {
    Scene scene;
    scene.id = recipe.scene_id;
    for (std::size_t k = 0; k < recipe.versions.size(); ++k)
      scene.versions.push_back(load_image(root / recipe.scene_id / (std::to_string(k) + ".png")));
    corpus.scenes.scenes.push_back(std::move(scene));
  }
  corpus.scenes.validate();
  return corpus;
}

}  // namespace msq
