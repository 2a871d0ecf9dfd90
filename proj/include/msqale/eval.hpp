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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace msq {

struct Rating {
  std::string subject;
  std::string session;
  std::string image;
  std::string scene;
  double score = 0.0;  // raw: [0,100]; after z-scoring: a z value
};

using RatingTable = std::vector<Rating>;

/// Checks raw scores lie in [0,100] and (subject, session, image) is unique.
void validate_ratings(const RatingTable& table);

/// CSV `subject_id,session_id,image_id,scene_id,score`. A header row and
/// lines starting with '#' are skipped.
RatingTable read_ratings_csv(const std::filesystem::path& path);
void write_ratings_csv(const RatingTable& table, const std::filesystem::path& path);

struct ZScoreResult {
  RatingTable table;
  /// "subject/session" groups removed for zero variance or fewer than two
  /// ratings.
  std::vector<std::string> dropped_groups;
};

/// z = (x - mean) / sd per (subject, session), sample sd.
ZScoreResult zscore_per_session(const RatingTable& table);

struct OutlierResult {
  RatingTable inliers;
  std::vector<std::string> rejected;
};

/// BT.500 subject screening. Per image: mean, sample sd and kurtosis
/// (m4/m2^2) over its ratings; the excursion band is 2 sd when the kurtosis
/// lies in [2,4] and sqrt(20) sd otherwise. A subject with P ratings at or
/// above the upper bound and Q at or below the lower bound is rejected when
/// (P+Q)/ratings > 0.05 and |P-Q|/(P+Q) < 0.3. Throws kInvalidArgument with
/// fewer than three subjects.
OutlierResult bt500_outlier_reject(const RatingTable& z_table);

struct MosEntry {
  std::string image;
  std::string scene;
  double mos = 0.0;
  int ratings = 0;
};

using MosTable = std::vector<MosEntry>;

/// Per-image mean z, then the affine map sending the smallest mean to 0 and
/// the largest to 100. Images in first-appearance order. Throws kDegenerate.
MosTable rescale_mos(const RatingTable& z_table);

MosTable read_mos_csv(const std::filesystem::path& path);
void write_mos_csv(const MosTable& mos, const std::filesystem::path& path);

/// Throws kShapeMismatch, kDegenerate (constant input), kInvalidArgument (n < 2).
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based) for ties.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of average-tied ranks. Needs n >= 3.
double srcc(std::span<const double> x, std::span<const double> y);

enum class LogisticForm {
  kFourParam,  // b2 + (b1 - b2) / (1 + exp(-(s - b3) / |b4|))
  kFiveParam,  // b1 (1/2 - 1/(1 + exp(b2 (s - b3)))) + b4 s + b5
};

double logistic_eval(LogisticForm form, std::span<const double> params, double s);

struct PlccResult {
  double plcc = 0.0;
  std::vector<double> params;
  bool converged = true;  // false: raw Pearson returned
  double sse = 0.0;
};

/// Least-squares logistic fit (Levenberg-Marquardt, 8 starts), then Pearson
/// of the mapped predictions against mos. Needs n >= 5, non-constant pred.
PlccResult plcc_logistic(std::span<const double> pred, std::span<const double> mos,
                         LogisticForm form = LogisticForm::kFourParam);

struct SplitRecord {
  std::vector<std::string> train_scenes;
  std::vector<std::string> test_scenes;
  double srcc = 0.0;
  double plcc = 0.0;
};

struct SplitSummary {
  double median_srcc = 0.0;
  double std_srcc = 0.0;
  double median_plcc = 0.0;
  double std_plcc = 0.0;
  std::vector<SplitRecord> splits;
};

struct SplitOptions {
  int splits = 100;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool higher_is_better = true;  // false negates predictions first
  LogisticForm form = LogisticForm::kFourParam;
};

/// Scene-disjoint random splits; the metric is evaluated on the test images
/// of each split. std is the sample sd over splits. Needs >= 2 scenes;
/// every MOS image must have a prediction.
SplitSummary scene_split_eval(const std::map<std::string, double>& predictions,
                              const MosTable& mos, const SplitOptions& opts);

/// Median over trials of the Pearson correlation between per-image mean
/// scores of two random equal halves of the subjects (one subject is left
/// out when the count is odd). Needs >= 4 subjects.
double split_half_consistency(const RatingTable& table, int trials, std::uint64_t seed);

/// `metric,median_srcc,std_srcc,median_plcc,std_plcc` with a version comment.
void write_eval_csv(const std::vector<std::pair<std::string, SplitSummary>>& rows,
                    const std::filesystem::path& path);

double median(std::vector<double> v);
double sample_std(std::span<const double> v);

}  // namespace msq
