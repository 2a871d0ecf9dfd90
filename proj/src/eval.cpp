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

#include "msqale/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "msqale/error.hpp"
#include "msqale/rng.hpp"
#include "parallel.hpp"

namespace msq {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kCorruptData, where + ": '" + s + "' is not a number");
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  return sorted[static_cast<std::size_t>(std::floor(q * (sorted.size() - 1)))];
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Model value and Jacobian row.
double logistic_with_grad(LogisticForm form, const Eigen::VectorXd& b, double s,
                          Eigen::Ref<Eigen::RowVectorXd> grad) {
  if (form == LogisticForm::kFourParam) {
    const double scale = std::max(std::abs(b(3)), 1e-300);
    const double z = (s - b(2)) / scale;
    const double sg = sigmoid(z);
    const double ds = sg * (1.0 - sg);
    grad(0) = sg;
    grad(1) = 1.0 - sg;
    grad(2) = (b(0) - b(1)) * ds * (-1.0 / scale);
    grad(3) = (b(0) - b(1)) * ds * (-z / scale) * (b(3) >= 0 ? 1.0 : -1.0);
    return b(1) + (b(0) - b(1)) * sg;
  }
  const double u = b(1) * (s - b(2));
  const double g = sigmoid(-u);  // 1 / (1 + e^u)
  const double dg = g * (1.0 - g);
  grad(0) = 0.5 - g;
  grad(1) = b(0) * dg * (s - b(2));
  grad(2) = -b(0) * dg * b(1);
  grad(3) = s;
  grad(4) = 1.0;
  return b(0) * (0.5 - g) + b(3) * s + b(4);
}

struct FitOutcome {
  Eigen::VectorXd params;
  double sse = 0.0;
  bool converged = false;
};

FitOutcome levenberg_marquardt(LogisticForm form, std::span<const double> x,
                               std::span<const double> y, Eigen::VectorXd params) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto p = params.size();
  Eigen::MatrixXd jac(n, p);
  Eigen::VectorXd resid(n);
  auto evaluate = [&](const Eigen::VectorXd& b, bool with_jac) {
    Eigen::RowVectorXd row(p);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f = logistic_with_grad(form, b, x[i], row);
      resid(i) = f - y[i];
      if (with_jac) jac.row(i) = row;
      sse += resid(i) * resid(i);
    }
    return sse;
  };

  double sse = evaluate(params, true);
  double lambda = 1e-3;
  FitOutcome out{params, sse, false};
  if (!std::isfinite(sse)) return out;
  for (int iter = 0; iter < 1000; ++iter) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * resid;
    const double diag_floor = 1e-12 * std::max(1e-300, jtj.diagonal().maxCoeff());
    Eigen::MatrixXd a = jtj;
    for (Eigen::Index k = 0; k < p; ++k) a(k, k) += lambda * std::max(jtj(k, k), diag_floor);
    const Eigen::VectorXd step = a.ldlt().solve(-jtr);
    const Eigen::VectorXd trial = params + step;
    const Eigen::VectorXd saved_resid = resid;
    const Eigen::MatrixXd saved_jac = jac;
    const double trial_sse = evaluate(trial, true);
    if (std::isfinite(trial_sse) && trial_sse < sse) {
      const double drop = sse - trial_sse;
      params = trial;
      sse = trial_sse;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (drop <= 1e-12 * sse || sse <= 1e-24 ||
          step.norm() <= 1e-12 * (params.norm() + 1e-12)) {
        out = {params, sse, true};
        return out;
      }
    } else {
      resid = saved_resid;
      jac = saved_jac;
      lambda *= 4.0;
      // No descent direction left at any damping: a stationary point.
      if (lambda > 1e14) {
        out = {params, sse, true};
        return out;
      }
    }
  }
  out = {params, sse, false};
  return out;
}

std::vector<Eigen::VectorXd> logistic_starts(LogisticForm form, std::span<const double> pred,
                                             std::span<const double> mos) {
  std::vector<double> sp(pred.begin(), pred.end());
  std::sort(sp.begin(), sp.end());
  const double sd = sample_std(pred);
  const double mlo = *std::min_element(mos.begin(), mos.end());
  const double mhi = *std::max_element(mos.begin(), mos.end());
  const bool increasing = pearson(pred, mos) >= 0.0;
  const std::array<double, 4> centers = {mean_of(pred), quantile_sorted(sp, 0.5),
                                         quantile_sorted(sp, 0.25), quantile_sorted(sp, 0.75)};
  const std::array<double, 2> widths = {sd, 0.25 * sd};
  std::vector<Eigen::VectorXd> starts;
  for (double c : centers)
    for (double w : widths) {
      if (form == LogisticForm::kFourParam) {
        Eigen::VectorXd b(4);
        b << (increasing ? mhi : mlo), (increasing ? mlo : mhi), c, w;
        starts.push_back(b);
      } else {
        Eigen::VectorXd b(5);
        b << (increasing ? 1.0 : -1.0) * (mhi - mlo), 1.0 / w, c, 0.0, 0.5 * (mhi + mlo);
        starts.push_back(b);
      }
    }
  return starts;
}

}  // namespace

void validate_ratings(const RatingTable& table) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& r : table) {
    require(r.score >= 0.0 && r.score <= 100.0, ErrorCode::kInvalidArgument,
            "rating " + std::to_string(r.score) + " outside [0,100]");
    require(seen.insert({r.subject, r.session, r.image}).second, ErrorCode::kInvalidArgument,
            "duplicate rating for " + r.subject + "/" + r.session + "/" + r.image);
  }
}

RatingTable read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path.string());
  RatingTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() == 5 && f[0] == "subject_id") continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 5) fail(ErrorCode::kCorruptData, where + ": expected 5 fields");
    table.push_back({f[0], f[1], f[2], f[3], parse_double(f[4], where)});
  }
  return table;
}

void write_ratings_csv(const RatingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());
  out << "subject_id,session_id,image_id,scene_id,score\n";
  out.precision(17);
  for (const auto& r : table)
    out << r.subject << ',' << r.session << ',' << r.image << ',' << r.scene << ',' << r.score
        << '\n';
}

ZScoreResult zscore_per_session(const RatingTable& table) {
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < table.size(); ++i)
    groups[{table[i].subject, table[i].session}].push_back(i);
  ZScoreResult out;
  std::vector<double> z(table.size(), 0.0);
  std::vector<bool> keep(table.size(), false);
  for (const auto& [key, rows] : groups) {
    std::vector<double> v;
    for (auto i : rows) v.push_back(table[i].score);
    const double sd = v.size() >= 2 ? sample_std(v) : 0.0;
    if (!(sd > 0.0)) {
      out.dropped_groups.push_back(key.first + "/" + key.second);
      continue;
    }
    const double m = mean_of(v);
    for (auto i : rows) {
      z[i] = (table[i].score - m) / sd;
      keep[i] = true;
    }
  }
  for (std::size_t i = 0; i < table.size(); ++i)
    if (keep[i]) {
      Rating r = table[i];
      r.score = z[i];
      out.table.push_back(std::move(r));
    }
  return out;
}

OutlierResult bt500_outlier_reject(const RatingTable& z_table) {
  std::set<std::string> subjects;
  for (const auto& r : z_table) subjects.insert(r.subject);
  require(subjects.size() >= 3, ErrorCode::kInvalidArgument,
          "outlier screening needs at least three subjects");

  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < z_table.size(); ++i) by_image[z_table[i].image].push_back(i);

  std::map<std::string, int> above, below, count;
  for (const auto& r : z_table) ++count[r.subject];
  for (const auto& [image, rows] : by_image) {
    if (rows.size() < 2) continue;
    std::vector<double> v;
    for (auto i : rows) v.push_back(z_table[i].score);
    const double m = mean_of(v);
    const double sd = sample_std(v);
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
      const double d = (x - m) * (x - m);
      m2 += d;
      m4 += d * d;
    }
    m2 /= v.size();
    m4 /= v.size();
    const double kurt = m2 > 0 ? m4 / (m2 * m2) : 0.0;
    const double band = (kurt >= 2.0 && kurt <= 4.0 ? 2.0 : std::sqrt(20.0)) * sd;
    if (!(sd > 0.0)) continue;
    for (auto i : rows) {
      const auto& r = z_table[i];
      if (r.score >= m + band) ++above[r.subject];
      if (r.score <= m - band) ++below[r.subject];
    }
  }

  OutlierResult out;
  std::set<std::string> rejected;
  for (const auto& s : subjects) {
    const int p = above[s], q = below[s];
    if (p + q == 0) continue;
    const double ratio = static_cast<double>(p + q) / count[s];
    const double balance = std::abs(static_cast<double>(p - q)) / (p + q);
    if (ratio > 0.05 && balance < 0.3) rejected.insert(s);
  }
  out.rejected.assign(rejected.begin(), rejected.end());
  for (const auto& r : z_table)
    if (!rejected.count(r.subject)) out.inliers.push_back(r);
  return out;
}

MosTable rescale_mos(const RatingTable& z_table) {
  require(!z_table.empty(), ErrorCode::kInvalidArgument, "no ratings to aggregate");
  MosTable mos;
  std::map<std::string, std::size_t> index;
  std::vector<double> sums;
  for (const auto& r : z_table) {
    auto [it, fresh] = index.try_emplace(r.image, mos.size());
    if (fresh) {
      mos.push_back({r.image, r.scene, 0.0, 0});
      sums.push_back(0.0);
    }
    sums[it->second] += r.score;
    ++mos[it->second].ratings;
  }
  require(mos.size() >= 2, ErrorCode::kDegenerate, "MOS rescaling needs at least two images");
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < mos.size(); ++i) {
    mos[i].mos = sums[i] / mos[i].ratings;
    lo = std::min(lo, mos[i].mos);
    hi = std::max(hi, mos[i].mos);
  }
  if (!(hi > lo)) fail(ErrorCode::kDegenerate, "all images have the same mean score");
  for (auto& e : mos) e.mos = 100.0 * (e.mos - lo) / (hi - lo);
  return mos;
}

MosTable read_mos_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path.string());
  MosTable mos;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() == 4 && f[0] == "image_id") continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 4) fail(ErrorCode::kCorruptData, where + ": expected 4 fields");
    mos.push_back({f[0], f[1], parse_double(f[2], where),
                   static_cast<int>(parse_double(f[3], where))});
  }
  return mos;
}

void write_mos_csv(const MosTable& mos, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());
  out << "# msqale mos v1\n";
  out << "image_id,scene_id,mos,ratings\n";
  out.precision(17);
  for (const auto& e : mos) out << e.image << ',' << e.scene << ',' << e.mos << ',' << e.ratings << '\n';
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::kShapeMismatch, "correlation inputs differ in length");
  require(x.size() >= 2, ErrorCode::kInvalidArgument, "correlation needs at least two points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::kDegenerate, "correlation of a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::kShapeMismatch, "SRCC inputs differ in length");
  require(x.size() >= 3, ErrorCode::kInvalidArgument, "SRCC needs at least three points");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

double logistic_eval(LogisticForm form, std::span<const double> params, double s) {
  const std::size_t p = form == LogisticForm::kFourParam ? 4 : 5;
  require(params.size() == p, ErrorCode::kShapeMismatch, "wrong logistic parameter count");
  Eigen::VectorXd b(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) b(static_cast<Eigen::Index>(i)) = params[i];
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(p));
  return logistic_with_grad(form, b, s, row);
}

PlccResult plcc_logistic(std::span<const double> pred, std::span<const double> mos,
                         LogisticForm form) {
  require(pred.size() == mos.size(), ErrorCode::kShapeMismatch, "PLCC inputs differ in length");
  require(pred.size() >= 5, ErrorCode::kInvalidArgument, "PLCC needs at least five points");
  const double raw = pearson(pred, mos);

  FitOutcome best;
  bool have = false;
  for (const auto& start : logistic_starts(form, pred, mos)) {
    auto fit = levenberg_marquardt(form, pred, mos, start);
    if (!fit.converged || !std::isfinite(fit.sse)) continue;
    if (!have || fit.sse < best.sse) {
      best = std::move(fit);
      have = true;
    }
  }
  PlccResult out;
  if (!have) {
    out.plcc = raw;
    out.converged = false;
    return out;
  }
  out.params.assign(best.params.data(), best.params.data() + best.params.size());
  out.sse = best.sse;
  std::vector<double> mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = logistic_eval(form, out.params, pred[i]);
  try {
    out.plcc = pearson(mapped, mos);
  } catch (const Error&) {
    // Fit collapsed to a constant curve.
    out.plcc = raw;
    out.converged = false;
  }
  return out;
}

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::kInvalidArgument, "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SplitSummary scene_split_eval(const std::map<std::string, double>& predictions,
                              const MosTable& mos, const SplitOptions& opts) {
  require(opts.splits >= 1, ErrorCode::kInvalidArgument, "need at least one split");
  require(opts.train_fraction > 0.0 && opts.train_fraction < 1.0, ErrorCode::kInvalidArgument,
          "train fraction must lie in (0,1)");
  std::vector<std::string> scenes;
  for (const auto& e : mos)
    if (std::find(scenes.begin(), scenes.end(), e.scene) == scenes.end()) scenes.push_back(e.scene);
  std::sort(scenes.begin(), scenes.end());
  require(scenes.size() >= 2, ErrorCode::kInvalidArgument, "scene splits need at least 2 scenes");
  for (const auto& e : mos)
    require(predictions.count(e.image) == 1, ErrorCode::kInvalidArgument,
            "no prediction for image " + e.image);

  const int total = static_cast<int>(scenes.size());
  const int n_train =
      std::clamp(static_cast<int>(std::lround(opts.train_fraction * total)), 1, total - 1);
  const SeededRng root(opts.seed);
  SplitSummary out;
  out.splits.resize(opts.splits);
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < opts.splits; ++s) trap.run([&] {
    SeededRng rng = root.child(static_cast<std::uint64_t>(s));
    std::vector<std::string> order = scenes;
    shuffle(order.begin(), order.end(), rng);
    SplitRecord rec;
    rec.train_scenes.assign(order.begin(), order.begin() + n_train);
    rec.test_scenes.assign(order.begin() + n_train, order.end());
    std::sort(rec.train_scenes.begin(), rec.train_scenes.end());
    std::sort(rec.test_scenes.begin(), rec.test_scenes.end());
    std::vector<double> p, m;
    for (const auto& e : mos)
      if (std::binary_search(rec.test_scenes.begin(), rec.test_scenes.end(), e.scene)) {
        const double v = predictions.at(e.image);
        p.push_back(opts.higher_is_better ? v : -v);
        m.push_back(e.mos);
      }
    rec.srcc = srcc(p, m);
    rec.plcc = plcc_logistic(p, m, opts.form).plcc;
    out.splits[s] = std::move(rec);
  });
  trap.rethrow();
  std::vector<double> sr, pl;
  for (const auto& r : out.splits) {
    sr.push_back(r.srcc);
    pl.push_back(r.plcc);
  }
  out.median_srcc = median(sr);
  out.std_srcc = sample_std(sr);
  out.median_plcc = median(pl);
  out.std_plcc = sample_std(pl);
  return out;
}

double split_half_consistency(const RatingTable& table, int trials, std::uint64_t seed) {
  require(trials >= 1, ErrorCode::kInvalidArgument, "need at least one trial");
  std::vector<std::string> subjects;
  {
    std::set<std::string> s;
    for (const auto& r : table) s.insert(r.subject);
    subjects.assign(s.begin(), s.end());
  }
  require(subjects.size() >= 4, ErrorCode::kInvalidArgument,
          "split-half consistency needs at least four subjects");
  const std::size_t half = subjects.size() / 2;
  const SeededRng root(seed);
  std::vector<double> results(static_cast<std::size_t>(trials));
  detail::ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) trap.run([&] {
    SeededRng rng = root.child(static_cast<std::uint64_t>(t));
    std::vector<std::string> order = subjects;
    shuffle(order.begin(), order.end(), rng);
    std::map<std::string, int> side;
    for (std::size_t i = 0; i < 2 * half; ++i) side[order[i]] = i < half ? 0 : 1;
    std::map<std::string, std::array<double, 4>> acc;  // sum0, n0, sum1, n1
    for (const auto& r : table) {
      auto it = side.find(r.subject);
      if (it == side.end()) continue;
      auto& a = acc[r.image];
      a[2 * it->second] += r.score;
      a[2 * it->second + 1] += 1.0;
    }
    std::vector<double> x, y;
    for (const auto& [image, a] : acc)
      if (a[1] > 0 && a[3] > 0) {
        x.push_back(a[0] / a[1]);
        y.push_back(a[2] / a[3]);
      }
    results[t] = pearson(x, y);
  });
  trap.rethrow();
  return median(results);
}

void write_eval_csv(const std::vector<std::pair<std::string, SplitSummary>>& rows,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());
  out << "# msqale eval v1\n";
  out << "metric,median_srcc,std_srcc,median_plcc,std_plcc\n";
  out.precision(10);
  for (const auto& [name, s] : rows)
    out << name << ',' << s.median_srcc << ',' << s.std_srcc << ',' << s.median_plcc << ','
        << s.std_plcc << '\n';
}

}  // namespace msq
