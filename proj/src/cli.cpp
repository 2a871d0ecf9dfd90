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

#include "msqale/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "msqale/config.hpp"
#include "msqale/corpus.hpp"
#include "msqale/error.hpp"
#include "msqale/eval.hpp"
#include "msqale/image_io.hpp"
#include "msqale/pristine.hpp"
#include "msqale/scorer.hpp"
#include "msqale/trainer.hpp"

namespace msq {
namespace fs = std::filesystem;
namespace {

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> keys;
};

const std::vector<std::string> kCommonKeys = {"seed", "tag", "runs_dir", "run_dir", "threads"};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"corpus", "Generate the distorted training corpus",
       {"bases", "scenes", "image_size", "versions"}},
      {"train", "Train one encoder per pyramid subband",
       {"corpus_dir", "levels", "tau", "epochs", "lr", "negatives", "input_side", "widths",
        "schedule", "jobs", "subbands"}},
      {"pristine", "Select pristine patches and fit the pristine model",
       {"corpus_dir", "pristine_images", "levels", "patch", "sharpness_frac",
        "colorfulness_frac", "dims", "use_sharpness", "use_colorfulness", "global_sharpness",
        "features", "weights_dir", "model"}},
      {"score", "Score images against the pristine model",
       {"images", "weights_dir", "model", "resize"}},
      {"eval", "Scene-disjoint SRCC/PLCC of scores against MOS",
       {"scores", "mos", "splits", "train_fraction", "logistic"}},
      {"mos", "Turn raw ratings into MOS (z-scores, BT.500 screening, rescale)",
       {"ratings", "consistency_trials"}},
  };
  return list;
}

std::string flag_name(const std::string& key) {
  std::string out = "--";
  for (char c : key) out += c == '_' ? '-' : c;
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

/// A single image file, or the .png/.ppm files of a directory sorted by name.
std::vector<fs::path> list_images(const fs::path& where) {
  if (!fs::exists(where)) fail(ErrorCode::kMissingFile, "no such file or directory: " + where.string());
  if (!fs::is_directory(where)) return {where};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(where)) {
    const auto ext = lower_ext(e.path());
    if (e.is_regular_file() && (ext == ".png" || ext == ".ppm")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  require(!out.empty(), ErrorCode::kEmptySelection, "no .png or .ppm images in " + where.string());
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, key + ": '" + item + "' is not an integer");
    }
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

class Run {
 public:
  Run(const std::string& command, Config cfg, std::ostream& out)
      : command_(command), cfg_(std::move(cfg)), out_(out) {
    if (!cfg_.get_string("run_dir").empty()) {
      dir_ = cfg_.get_string("run_dir");
    } else {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      std::ostringstream name;
      name << std::put_time(&tm, "%Y%m%d-%H%M%S") << '-' << cfg_.get_string("tag");
      dir_ = fs::path(cfg_.get_string("runs_dir")) / name.str();
      for (int i = 1; fs::exists(dir_); ++i)
        dir_ = fs::path(cfg_.get_string("runs_dir")) / (name.str() + "." + std::to_string(i));
    }
    std::error_code ec;
    fs::create_directories(dir_ / "logs", ec);
    if (ec) fail(ErrorCode::kUnwritablePath, "cannot create run directory " + dir_.string());
    cfg_.set("run_dir", dir_.string(), "resolved");

    const std::string text = "# msqale config v1\n# command: " + command_ + "\n" + cfg_.resolved_text();
    write_text(dir_ / "config.resolved", text);
    write_text(dir_ / "logs" / (command_ + ".config"), text);
    log_.open(dir_ / "logs" / (command_ + ".log"));
    if (!log_) fail(ErrorCode::kUnwritablePath, "cannot write logs in " + dir_.string());
    out_ << "run_dir " << dir_.string() << '\n';
  }

  const Config& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }
  std::ostream& out() { return out_; }

  void note(const std::string& line) {
    log_ << line << '\n';
    log_.flush();
  }

  /// `key` if set, else <run>/<fallback>.
  fs::path path_or(const std::string& key, const std::string& fallback) const {
    const auto& v = cfg_.get_string(key);
    return v.empty() ? dir_ / fallback : fs::path(v);
  }

  static void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());
    f << text;
    if (!f) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());
  }

 private:
  std::string command_;
  Config cfg_;
  std::ostream& out_;
  fs::path dir_;
  std::ofstream log_;
};

int checked_int(const Config& cfg, const std::string& key, long long lo, long long hi) {
  const long long v = cfg.get_int(key);
  require(v >= lo && v <= hi, ErrorCode::kInvalidArgument,
          key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

void cmd_corpus(Run& run) {
  const auto& cfg = run.cfg();
  const std::uint64_t seed = cfg.get_uint("seed");
  const int versions = checked_int(cfg, "versions", 2, 1000);
  std::vector<Image> bases;
  std::vector<std::string> names;
  if (!cfg.get_string("bases").empty()) {
    for (const auto& p : list_images(cfg.get_string("bases"))) {
      bases.push_back(load_image(p));
      names.push_back(p.filename().string());
    }
  } else {
    const int scenes = checked_int(cfg, "scenes", 1, 100000);
    const int side = checked_int(cfg, "image_size", 16, 1 << 14);
    const SeededRng synth(child_seed(seed, 0x5C3E));
    for (int i = 0; i < scenes; ++i) {
      SeededRng rng = synth.child(static_cast<std::uint64_t>(i));
      bases.push_back(synthesize_scene(side, side, rng));
      char name[32];
      std::snprintf(name, sizeof name, "synthetic_%03d", i);
      names.emplace_back(name);
    }
  }
  const auto corpus = build_training_corpus(bases, versions, seed, names);
  write_corpus(corpus, run.dir() / "corpus");
  run.note("scenes " + std::to_string(corpus.scenes.scene_count()) + ", versions " +
           std::to_string(versions));
  run.out() << "corpus " << (run.dir() / "corpus").string() << " scenes "
            << corpus.scenes.scene_count() << " versions " << versions << '\n';
}

std::vector<std::pair<Subband, BatchShape>> parse_schedule(const std::string& text, int levels) {
  std::vector<std::pair<Subband, BatchShape>> out;
  if (text == "desk" || text.empty()) return out;
  if (text == "full") {
    for (const auto& s : Subband::all(levels)) out.emplace_back(s, full_schedule(s));
    return out;
  }
  for (const auto& item : split_list(text)) {
    const auto eq = item.find('=');
    const auto x = item.find('x', eq == std::string::npos ? 0 : eq);
    require(eq != std::string::npos && x != std::string::npos, ErrorCode::kInvalidArgument,
            "schedule entry '" + item + "' is not band=NxK");
    const auto nk = parse_int_list(item.substr(eq + 1, x - eq - 1) + "," + item.substr(x + 1),
                                   "schedule");
    require(nk.size() == 2, ErrorCode::kInvalidArgument, "schedule entry '" + item + "'");
    out.emplace_back(Subband::parse(item.substr(0, eq)), BatchShape{nk[0], nk[1]});
  }
  return out;
}

void cmd_train(Run& run) {
  const auto& cfg = run.cfg();
  const auto corpus = read_corpus(run.path_or("corpus_dir", "corpus"));
  TrainConfig tc;
  tc.tau = cfg.get_real("tau");
  tc.epochs = checked_int(cfg, "epochs", 1, 1000000);
  tc.adam.lr = cfg.get_real("lr");
  tc.pyramid_levels = checked_int(cfg, "levels", 0, 16);
  tc.arch.input_side = checked_int(cfg, "input_side", 2, 4096);
  tc.arch.widths = parse_int_list(cfg.get_string("widths"), "widths");
  tc.negatives = parse_negative_mode(cfg.get_string("negatives"));
  tc.seed = cfg.get_uint("seed");
  tc.schedule = parse_schedule(cfg.get_string("schedule"), tc.pyramid_levels);
  tc.validate();

  std::vector<Subband> levels;
  if (cfg.get_string("subbands") == "all") {
    levels = Subband::all(tc.pyramid_levels);
  } else {
    for (const auto& name : split_list(cfg.get_string("subbands")))
      levels.push_back(Subband::parse(name));
  }
  require(!levels.empty(), ErrorCode::kInvalidArgument, "no subbands to train");
  const int jobs = checked_int(cfg, "jobs", 1, 1024);

  const fs::path weights_dir = run.path_or("weights_dir", "weights");
  std::error_code ec;
  fs::create_directories(weights_dir, ec);
  if (ec) fail(ErrorCode::kUnwritablePath, "cannot create " + weights_dir.string());

  const int count = static_cast<int>(levels.size());
  std::vector<TrainResult> results(levels.size());
  std::vector<std::exception_ptr> errors(levels.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
  for (int i = 0; i < count; ++i) {
    try {
      results[i] = train_subband(corpus.scenes, levels[i], tc);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (int i = 0; i < count; ++i) {
    const auto name = levels[i].name();
    save_weights(results[i].weights, (weights_dir / (name + ".msqw")).string());
    std::ostringstream csv;
    csv << "# msqale loss v1 subband=" << name << "\nepoch,batch,loss\n";
    for (const auto& r : results[i].losses)
      csv << r.epoch << ',' << r.batch << ',' << num(r.loss) << '\n';
    Run::write_text(run.dir() / "logs" / ("loss_" + name + ".csv"), csv.str());
    const double last = results[i].epoch_mean(tc.epochs - 1);
    run.note(name + " final epoch mean loss " + num(last));
    run.out() << "trained " << name << " final_loss " << num(last) << '\n';
  }
}

void cmd_pristine(Run& run) {
  const auto& cfg = run.cfg();
  PristineConfig pc;
  pc.patch = checked_int(cfg, "patch", 2, 1 << 14);
  pc.sharpness_frac = cfg.get_real("sharpness_frac");
  pc.colorfulness_frac = cfg.get_real("colorfulness_frac");
  pc.dims = checked_int(cfg, "dims", 0, 1 << 20);
  pc.use_sharpness = cfg.get_bool("use_sharpness");
  pc.use_colorfulness = cfg.get_bool("use_colorfulness");
  pc.global_sharpness = cfg.get_bool("global_sharpness");
  pc.validate();
  const int levels = checked_int(cfg, "levels", 0, 16);
  const FeatureKind kind = parse_feature_kind(cfg.get_string("features"));

  std::vector<Image> images;
  if (!cfg.get_string("pristine_images").empty()) {
    for (const auto& p : list_images(cfg.get_string("pristine_images")))
      images.push_back(load_image(p));
  } else {
    // Version 1 of every corpus scene is its unmodified well-lit image.
    auto corpus = read_corpus(run.path_or("corpus_dir", "corpus"));
    for (auto& scene : corpus.scenes.scenes) images.push_back(std::move(scene.versions.at(1)));
  }

  const auto selected = select_pristine_patches(images, pc);
  EncoderSet encoders;
  if (kind == FeatureKind::kMsqale)
    encoders = EncoderSet::load(run.path_or("weights_dir", "weights"), levels);
  const Matrix features = pristine_features(images, selected, kind,
                                            kind == FeatureKind::kMsqale ? &encoders : nullptr);
  const auto model = build_pristine_model(features, pc.dims, feature_kind_name(kind), levels,
                                          pc.patch);
  const fs::path model_path = run.path_or("model", "pristine.model");
  save_pristine(model, model_path.string());
  run.note("candidate images " + std::to_string(images.size()) + ", pristine patches " +
           std::to_string(selected.size()) + ", feature dim " +
           std::to_string(features.cols()) + ", D " + std::to_string(model.pca.dims()));
  run.out() << "pristine " << model_path.string() << " patches " << selected.size() << " dims "
            << model.pca.dims() << '\n';
}

Image resize_longer_side(const Image& img, int side) {
  const double s = static_cast<double>(side) / std::max(img.width(), img.height());
  const int w = std::max(1, static_cast<int>(std::lround(img.width() * s)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height() * s)));
  return resize_bilinear(img, w, h);
}

void cmd_score(Run& run) {
  const auto& cfg = run.cfg();
  require(!cfg.get_string("images").empty(), ErrorCode::kInvalidArgument,
          "score needs --images");
  const auto model = load_pristine(run.path_or("model", "pristine.model").string());
  const FeatureKind kind = parse_feature_kind(model.feature_kind);
  EncoderSet encoders;
  if (kind == FeatureKind::kMsqale)
    encoders = EncoderSet::load(run.path_or("weights_dir", "weights"), model.pyramid_levels);
  const int resize = checked_int(cfg, "resize", 0, 1 << 14);

  const fs::path root = cfg.get_string("images");
  const auto files = list_images(root);
  std::ostringstream csv;
  csv << "# msqale scores v1 features=" << model.feature_kind << "\npath,Q,patch_count\n";
  for (const auto& file : files) {
    Image img = load_image(file);
    if (resize > 0) img = resize_longer_side(img, resize);
    const auto s = score_image(img, model, kind == FeatureKind::kMsqale ? &encoders : nullptr,
                               model.patch);
    const std::string rel =
        fs::is_directory(root) ? file.lexically_relative(root).generic_string()
                               : file.filename().generic_string();
    csv << rel << ',' << num(s.q) << ',' << s.patch_count << '\n';
    run.note(rel + " Q " + num(s.q));
  }
  const fs::path out = run.path_or("scores", "scores.csv");
  Run::write_text(out, csv.str());
  run.out() << "scores " << out.string() << " images " << files.size() << '\n';
}

struct ScoresFile {
  std::string metric = "Q";
  std::map<std::string, double> by_image;
};

ScoresFile read_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path.string());
  ScoresFile out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto at = line.find("features=");
      if (at != std::string::npos) out.metric = line.substr(at + 9);
      continue;
    }
    if (line.rfind("path,", 0) == 0) continue;
    const auto f = split_list(line);
    const std::string where = path.string() + ":" + std::to_string(n);
    require(f.size() == 3, ErrorCode::kCorruptData, where + ": expected path,Q,patch_count");
    double q = 0.0;
    try {
      q = std::stod(f[1]);
    } catch (const std::exception&) {
      fail(ErrorCode::kCorruptData, where + ": bad Q '" + f[1] + "'");
    }
    const std::string id = fs::path(f[0]).stem().string();
    require(out.by_image.emplace(id, q).second, ErrorCode::kCorruptData,
            where + ": duplicate image id " + id);
  }
  return out;
}

void cmd_eval(Run& run) {
  const auto& cfg = run.cfg();
  const auto scores = read_scores(run.path_or("scores", "scores.csv"));
  const auto mos = read_mos_csv(run.path_or("mos", "mos.csv"));
  SplitOptions opts;
  opts.splits = checked_int(cfg, "splits", 1, 1000000);
  opts.train_fraction = cfg.get_real("train_fraction");
  opts.seed = cfg.get_uint("seed");
  opts.higher_is_better = false;  // Q is a distance
  const int logistic = checked_int(cfg, "logistic", 4, 5);
  opts.form = logistic == 4 ? LogisticForm::kFourParam : LogisticForm::kFiveParam;
  const auto summary = scene_split_eval(scores.by_image, mos, opts);
  write_eval_csv({{scores.metric, summary}}, run.dir() / "eval.csv");

  std::ostringstream splits;
  splits << "# msqale splits v1\nsplit,srcc,plcc,test_scenes\n";
  for (std::size_t i = 0; i < summary.splits.size(); ++i) {
    const auto& s = summary.splits[i];
    splits << i << ',' << num(s.srcc) << ',' << num(s.plcc) << ',';
    for (std::size_t j = 0; j < s.test_scenes.size(); ++j)
      splits << (j ? ";" : "") << s.test_scenes[j];
    splits << '\n';
  }
  Run::write_text(run.dir() / "logs" / "splits.csv", splits.str());
  run.out() << "eval " << (run.dir() / "eval.csv").string() << " median_srcc "
            << num(summary.median_srcc) << " median_plcc " << num(summary.median_plcc) << '\n';
}

void cmd_mos(Run& run) {
  const auto& cfg = run.cfg();
  require(!cfg.get_string("ratings").empty(), ErrorCode::kInvalidArgument, "mos needs --ratings");
  const auto table = read_ratings_csv(cfg.get_string("ratings"));
  validate_ratings(table);
  const auto z = zscore_per_session(table);
  const auto screened = bt500_outlier_reject(z.table);
  const auto mos = rescale_mos(screened.inliers);
  const fs::path out = run.path_or("mos", "mos.csv");
  write_mos_csv(mos, out);
  for (const auto& g : z.dropped_groups) run.note("dropped constant session " + g);
  for (const auto& s : screened.rejected) run.note("rejected subject " + s);

  std::set<std::string> subjects;
  for (const auto& r : screened.inliers) subjects.insert(r.subject);
  std::string consistency = "n/a";
  if (subjects.size() >= 4) {
    const int trials = checked_int(cfg, "consistency_trials", 1, 1000000);
    consistency = num(split_half_consistency(screened.inliers, trials, cfg.get_uint("seed")));
  }
  run.note("split-half consistency " + consistency);
  run.out() << "mos " << out.string() << " images " << mos.size() << " rejected_subjects "
            << screened.rejected.size() << " consistency " << consistency << '\n';
}

using Handler = void (*)(Run&);

Handler handler_for(const std::string& name) {
  if (name == "corpus") return cmd_corpus;
  if (name == "train") return cmd_train;
  if (name == "pristine") return cmd_pristine;
  if (name == "score") return cmd_score;
  if (name == "eval") return cmd_eval;
  return cmd_mos;
}

void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << "error code=" << code << " message=" << std::quoted(message) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"msqale: unsupervised no-reference quality scoring for low-light restored images",
               "msqale"};
  app.require_subcommand(1);
  app.footer("Configuration layers: defaults < --config file < MSQALE_<KEY> environment < flags.\n"
             "See docs/config.md for every key.");

  std::string config_path;
  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands()) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "config file (key = value lines)");
    auto& values = flag_values[c.name];
    std::vector<std::string> keys = kCommonKeys;
    keys.insert(keys.end(), c.keys.begin(), c.keys.end());
    for (const auto& key : keys) {
      const auto& spec = key_spec(key);
      std::string help = spec.help;
      if (!spec.default_value.empty()) help += " [" + spec.default_value + "]";
      sub->add_option(flag_name(key), values[key], help);
    }
    subs[c.name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Config cfg;
  try {
    if (config_path.empty())
      if (const char* p = std::getenv("MSQALE_CONFIG")) config_path = p;
    if (!config_path.empty()) cfg.load_file(config_path);
    cfg.load_env([](const char* n) { return static_cast<const char*>(std::getenv(n)); });
  } catch (const Error& e) {
    print_error(err, error_code_name(e.code()), e.what());
    return kExitFailure;
  }
  try {
    for (const auto& [key, value] : flag_values[name])
      if (subs[name]->count(flag_name(key)) > 0) cfg.set(key, value, "flag " + flag_name(key));
  } catch (const Error& e) {
    err << e.what() << '\n' << subs[name]->help();
    return kExitUsage;
  }

  try {
    const int threads = static_cast<int>(cfg.get_int("threads"));
    if (threads > 0) omp_set_num_threads(threads);
    Run r(name, cfg, out);
    const auto start = std::chrono::steady_clock::now();
    handler_for(name)(r);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.note("elapsed_seconds " + num(secs));
    return kExitOk;
  } catch (const Error& e) {
    print_error(err, error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
  }
  return kExitFailure;
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace msq
