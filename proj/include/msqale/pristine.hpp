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
#include <vector>

#include <Eigen/Dense>

#include "msqale/image.hpp"

namespace msq {

using Vector = Eigen::VectorXd;
/// Sample matrices hold one sample per row.
using Matrix = Eigen::MatrixXd;

struct PristineConfig {
  int patch = 96;                 // P
  double sharpness_frac = 0.3;    // tau_s
  double colorfulness_frac = 0.8; // tau_c
  int dims = 0;                   // D; 0 picks min(2048, feature dim, samples - 1)
  bool use_sharpness = true;
  bool use_colorfulness = true;
  bool global_sharpness = false;  // compare to the corpus-wide maximum instead

  void validate() const;
};

/// 7x7 Gaussian window, sigma 7/6, weights normalized to sum 1.
const std::vector<double>& local_window();

/// Mean over all valid 7x7 window positions of the Gaussian-weighted local
/// standard deviation of luma. Throws kTooSmall below 7x7.
double sharpness_index(const Image& patch);

/// Hasler-Suesstrunk: rg = R-G, yb = (R+G)/2 - B,
/// sqrt(var_rg + var_yb) + 0.3 sqrt(mean_rg^2 + mean_yb^2), population
/// moments. Throws kShapeMismatch for non-RGB input.
double colorfulness_index(const Image& patch);

struct PristinePatch {
  std::size_t image = 0;  // index into the input list
  Patch patch;
  double sharpness = 0.0;
  double colorfulness = 0.0;
};

/// Non-overlapping P x P tiling of every image; keeps tiles strictly above
/// the fraction-of-maximum thresholds (maxima per image unless
/// global_sharpness). Throws kEmptySelection, kTooSmall.
std::vector<PristinePatch> select_pristine_patches(const std::vector<Image>& images,
                                                   const PristineConfig& cfg);

struct PcaModel {
  Vector mean;
  Matrix basis;       // columns are unit principal directions, dim x D
  Vector explained;   // variance along each column, nonincreasing

  int dims() const { return static_cast<int>(basis.cols()); }
  int input_dim() const { return static_cast<int>(mean.size()); }
};

/// Top-D eigenvectors of the (n-1)-normalized sample covariance; the
/// largest-magnitude entry of each direction is made positive.
/// Throws kInvalidArgument (D out of range), kDegenerate (identical samples).
PcaModel fit_pca(const Matrix& samples, int dims);

/// basis^T (v - mean). Throws kShapeMismatch.
Vector pca_project(const PcaModel& model, const Vector& v);
Matrix pca_project_rows(const PcaModel& model, const Matrix& samples);

struct MvgModel {
  Vector mean;
  Matrix cov;
};

/// Sample mean and (n-1)-normalized covariance, symmetrized.
/// Throws kInvalidArgument for fewer than two samples.
MvgModel fit_mvg(const Matrix& samples);

/// Reference statistics of pristine features.
struct PristineModel {
  std::string feature_kind = "msqale";  // "msqale" or "nss"
  int pyramid_levels = 0;
  int patch = 0;
  PcaModel pca;
  MvgModel mvg;
};

/// PCA on the pristine features, then an MVG of the projections.
PristineModel build_pristine_model(const Matrix& features, int dims,
                                   const std::string& feature_kind, int pyramid_levels,
                                   int patch);

inline constexpr std::uint32_t kPristineFormatVersion = 1;

/// Little-endian: "MSQP", u32 version, u32 kind length, kind bytes, u32 M,
/// u32 P, u32 input dim, u32 D, f64 pca mean, f64 basis (column-major),
/// f64 explained, f64 mu, f64 sigma (column-major).
void save_pristine(const PristineModel& model, const std::string& path);
PristineModel load_pristine(const std::string& path);
std::vector<std::uint8_t> pristine_serialize(const PristineModel& model);
PristineModel pristine_deserialize(std::span<const std::uint8_t> bytes);

}  // namespace msq
