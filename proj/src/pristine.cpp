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

#include "msqale/pristine.hpp"

#include <algorithm>
#include <cmath>

#include "binio.hpp"
#include "msqale/error.hpp"
#include "parallel.hpp"

namespace msq {

void PristineConfig::validate() const {
  require(patch >= 7, ErrorCode::kInvalidArgument, "pristine patch side must be >= 7");
  require(sharpness_frac > 0.0 && sharpness_frac <= 1.0, ErrorCode::kInvalidArgument,
          "tau_s must lie in (0, 1]");
  require(colorfulness_frac > 0.0 && colorfulness_frac <= 1.0, ErrorCode::kInvalidArgument,
          "tau_c must lie in (0, 1]");
  require(dims >= 0, ErrorCode::kInvalidArgument, "D must be >= 1 (or 0 for automatic)");
}

const std::vector<double>& local_window() {
  static const std::vector<double> taps = [] {
    std::vector<double> t(7);
    const double sigma = 7.0 / 6.0;
    double sum = 0.0;
    for (int i = -3; i <= 3; ++i) {
      t[i + 3] = std::exp(-0.5 * i * i / (sigma * sigma));
      sum += t[i + 3];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

double sharpness_index(const Image& patch) {
  const Image luma = to_luma(patch);
  const int w = luma.width(), h = luma.height();
  if (w < 7 || h < 7) fail(ErrorCode::kTooSmall, "sharpness needs at least a 7x7 patch");
  const auto& t = local_window();
  double total = 0.0;
  for (int y = 3; y < h - 3; ++y)
    for (int x = 3; x < w - 3; ++x) {
      double mu = 0.0;
      for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) mu += t[dy + 3] * t[dx + 3] * luma.at(0, y + dy, x + dx);
      double var = 0.0;
      for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
          const double d = luma.at(0, y + dy, x + dx) - mu;
          var += t[dy + 3] * t[dx + 3] * d * d;
        }
      total += std::sqrt(var);
    }
  return total / (static_cast<double>(w - 6) * (h - 6));
}

double colorfulness_index(const Image& patch) {
  require(patch.channels() == 3, ErrorCode::kShapeMismatch, "colorfulness needs an RGB patch");
  require(!patch.empty(), ErrorCode::kInvalidArgument, "colorfulness of an empty patch");
  const auto r = patch.plane(0), g = patch.plane(1), b = patch.plane(2);
  const double n = static_cast<double>(r.size());
  double mrg = 0.0, myb = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mrg += r[i] - g[i];
    myb += 0.5 * (r[i] + g[i]) - b[i];
  }
  mrg /= n;
  myb /= n;
  double vrg = 0.0, vyb = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double drg = (r[i] - g[i]) - mrg;
    const double dyb = (0.5 * (r[i] + g[i]) - b[i]) - myb;
    vrg += drg * drg;
    vyb += dyb * dyb;
  }
  vrg /= n;
  vyb /= n;
  return std::sqrt(vrg + vyb) + 0.3 * std::sqrt(mrg * mrg + myb * myb);
}

std::vector<PristinePatch> select_pristine_patches(const std::vector<Image>& images,
                                                   const PristineConfig& cfg) {
  cfg.validate();
  const int p = cfg.patch;
  std::vector<std::vector<PristinePatch>> tiles(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    if (img.width() < p || img.height() < p)
      fail(ErrorCode::kTooSmall, "pristine image smaller than the patch size");
    for (int y = 0; y + p <= img.height(); y += p)
      for (int x = 0; x + p <= img.width(); x += p) {
        PristinePatch pp;
        pp.image = i;
        pp.patch = crop_patch(img, x, y, p);
        tiles[i].push_back(std::move(pp));
      }
  }
  // Indices are independent per tile.
  std::vector<PristinePatch*> flat;
  for (auto& t : tiles)
    for (auto& pp : t) flat.push_back(&pp);
  const int n = static_cast<int>(flat.size());
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    trap.run([&] {
      flat[i]->sharpness = sharpness_index(flat[i]->patch.pixels);
      flat[i]->colorfulness =
          flat[i]->patch.pixels.channels() == 3 ? colorfulness_index(flat[i]->patch.pixels) : 0.0;
    });
  }
  trap.rethrow();

  double global_sharp = 0.0;
  for (const auto* pp : flat) global_sharp = std::max(global_sharp, pp->sharpness);

  std::vector<PristinePatch> out;
  for (auto& t : tiles) {
    double max_sharp = 0.0, max_color = 0.0;
    for (const auto& pp : t) {
      max_sharp = std::max(max_sharp, pp.sharpness);
      max_color = std::max(max_color, pp.colorfulness);
    }
    if (cfg.global_sharpness) max_sharp = global_sharp;
    for (auto& pp : t) {
      const bool sharp = !cfg.use_sharpness || pp.sharpness > cfg.sharpness_frac * max_sharp;
      const bool colorful =
          !cfg.use_colorfulness || pp.colorfulness > cfg.colorfulness_frac * max_color;
      if (sharp && colorful) out.push_back(std::move(pp));
    }
  }
  if (out.empty()) fail(ErrorCode::kEmptySelection, "no patch passed the pristine criteria");
  return out;
}

PcaModel fit_pca(const Matrix& samples, int dims) {
  const auto n = samples.rows(), d = samples.cols();
  require(n >= 2, ErrorCode::kInvalidArgument, "PCA needs at least two samples");
  require(dims >= 1 && dims <= std::min<Eigen::Index>(n - 1, d), ErrorCode::kInvalidArgument,
          "PCA dimension " + std::to_string(dims) + " outside [1, min(n-1, dim)]");
  PcaModel m;
  m.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - m.mean.transpose();
  if (centered.cwiseAbs().maxCoeff() == 0.0)
    fail(ErrorCode::kDegenerate, "PCA samples are all identical");
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, ErrorCode::kDegenerate, "PCA eigen-decomposition failed");
  // Eigen returns ascending eigenvalues.
  m.basis.resize(d, dims);
  m.explained.resize(dims);
  for (int j = 0; j < dims; ++j) {
    const auto src = d - 1 - j;
    Vector col = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    m.basis.col(j) = col;
    m.explained(j) = std::max(0.0, eig.eigenvalues()(src));
  }
  return m;
}

Vector pca_project(const PcaModel& model, const Vector& v) {
  require(v.size() == model.mean.size(), ErrorCode::kShapeMismatch,
          "PCA input dimension mismatch");
  return model.basis.transpose() * (v - model.mean);
}

Matrix pca_project_rows(const PcaModel& model, const Matrix& samples) {
  require(samples.cols() == model.mean.size(), ErrorCode::kShapeMismatch,
          "PCA input dimension mismatch");
  return (samples.rowwise() - model.mean.transpose()) * model.basis;
}

MvgModel fit_mvg(const Matrix& samples) {
  const auto n = samples.rows();
  require(n >= 2, ErrorCode::kInvalidArgument, "MVG fit needs at least two samples");
  MvgModel m;
  m.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  return m;
}

PristineModel build_pristine_model(const Matrix& features, int dims,
                                   const std::string& feature_kind, int pyramid_levels,
                                   int patch) {
  require(features.rows() >= 2, ErrorCode::kInvalidArgument,
          "pristine model needs at least two patches");
  if (dims <= 0)
    dims = static_cast<int>(std::min<Eigen::Index>({2048, features.cols(), features.rows() - 1}));
  PristineModel model;
  model.feature_kind = feature_kind;
  model.pyramid_levels = pyramid_levels;
  model.patch = patch;
  model.pca = fit_pca(features, dims);
  model.mvg = fit_mvg(pca_project_rows(model.pca, features));
  return model;
}

std::vector<std::uint8_t> pristine_serialize(const PristineModel& model) {
  binio::Writer out;
  out.magic("MSQP");
  out.u32(kPristineFormatVersion);
  out.text(model.feature_kind);
  out.u32(static_cast<std::uint32_t>(model.pyramid_levels));
  out.u32(static_cast<std::uint32_t>(model.patch));
  const auto in_dim = model.pca.mean.size();
  const auto d = model.pca.basis.cols();
  out.u32(static_cast<std::uint32_t>(in_dim));
  out.u32(static_cast<std::uint32_t>(d));
  for (Eigen::Index i = 0; i < in_dim; ++i) out.f64(model.pca.mean(i));
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < in_dim; ++i) out.f64(model.pca.basis(i, j));
  for (Eigen::Index j = 0; j < d; ++j) out.f64(model.pca.explained(j));
  for (Eigen::Index j = 0; j < d; ++j) out.f64(model.mvg.mean(j));
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) out.f64(model.mvg.cov(i, j));
  return out.take();
}

PristineModel pristine_deserialize(std::span<const std::uint8_t> bytes) {
  binio::Reader in(bytes);
  in.magic("MSQP");
  const auto version = in.u32();
  if (version != kPristineFormatVersion)
    fail(ErrorCode::kVersionMismatch, "pristine model format version " + std::to_string(version));
  PristineModel m;
  m.feature_kind = in.text(64);
  m.pyramid_levels = static_cast<int>(in.u32());
  m.patch = static_cast<int>(in.u32());
  const auto in_dim = static_cast<Eigen::Index>(in.u32());
  const auto d = static_cast<Eigen::Index>(in.u32());
  if (in_dim < 1 || d < 1 || d > in_dim || in_dim > (1 << 16))
    fail(ErrorCode::kCorruptData, "pristine model: bad dimensions");
  const auto need = static_cast<std::size_t>(in_dim + in_dim * d + 2 * d + d * d) * 8;
  if (in.remaining() < need) fail(ErrorCode::kTruncated, "pristine model truncated");
  m.pca.mean.resize(in_dim);
  for (Eigen::Index i = 0; i < in_dim; ++i) m.pca.mean(i) = in.f64();
  m.pca.basis.resize(in_dim, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < in_dim; ++i) m.pca.basis(i, j) = in.f64();
  m.pca.explained.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) m.pca.explained(j) = in.f64();
  m.mvg.mean.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) m.mvg.mean(j) = in.f64();
  m.mvg.cov.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) m.mvg.cov(i, j) = in.f64();
  if (!in.at_end()) fail(ErrorCode::kCorruptData, "pristine model: trailing bytes");
  return m;
}

void save_pristine(const PristineModel& model, const std::string& path) {
  binio::write_file(path, pristine_serialize(model));
}

PristineModel load_pristine(const std::string& path) {
  return pristine_deserialize(binio::read_file(path));
}

}  // namespace msq
