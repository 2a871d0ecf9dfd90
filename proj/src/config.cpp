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

#include "msqale/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "msqale/error.hpp"

namespace msq {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, bool& out) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "1" || l == "yes" || l == "on") return out = true, true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return out = false, true;
  return false;
}

template <typename T>
bool parse_number(const std::string& v, T& out) {
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  return ec == std::errc() && ptr == end && !v.empty();
}

bool parse_real(const std::string& v, double& out) {
  if (v.empty()) return false;
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  in >> out;
  return in && in.peek() == std::char_traits<char>::eof();
}

const char* type_name(KeyType t) {
  switch (t) {
    case KeyType::kInt: return "int";
    case KeyType::kUint: return "uint";
    case KeyType::kReal: return "real";
    case KeyType::kBool: return "bool";
    case KeyType::kString: return "string";
  }
  return "?";
}

bool type_ok(KeyType t, const std::string& v) {
  long long i;
  std::uint64_t u;
  double d;
  bool b;
  switch (t) {
    case KeyType::kInt: return parse_number(v, i);
    case KeyType::kUint: return parse_number(v, u);
    case KeyType::kReal: return parse_real(v, d);
    case KeyType::kBool: return parse_bool(v, b);
    case KeyType::kString: return true;
  }
  return false;
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  using K = KeyType;
  static const std::vector<KeySpec> keys = {
      {"seed", K::kUint, "1", "root seed for every random choice"},
      {"tag", K::kString, "run", "suffix of a freshly created run directory"},
      {"runs_dir", K::kString, "runs", "parent of freshly created run directories"},
      {"run_dir", K::kString, "", "use this run directory instead of creating one"},
      {"threads", K::kInt, "0", "OpenMP threads, 0 keeps the runtime default"},

      {"bases", K::kString, "", "directory of well-lit base images; empty synthesizes scenes"},
      {"scenes", K::kInt, "8", "number of synthesized scenes when bases is empty"},
      {"image_size", K::kInt, "192", "side of synthesized scenes"},
      {"versions", K::kInt, "4", "versions per scene (K)"},

      {"corpus_dir", K::kString, "", "training corpus, default <run>/corpus"},
      {"levels", K::kInt, "3", "pyramid depth (M)"},
      {"tau", K::kReal, "0.1", "contrastive temperature"},
      {"epochs", K::kInt, "15", "training epochs per subband"},
      {"lr", K::kReal, "0.001", "Adam learning rate"},
      {"negatives", K::kString, "same_scene", "same_scene or cross_scene"},
      {"input_side", K::kInt, "64", "side patches are resized to before encoding"},
      {"widths", K::kString, "16,32,64", "encoder channel widths, one per block"},
      {"schedule", K::kString, "desk",
       "desk, full, or overrides such as image=2x4,hp1=4x4 (scenes x versions)"},
      {"jobs", K::kInt, "1", "subbands trained concurrently"},
      {"subbands", K::kString, "all", "all, or a list such as image,hp1,lowpass"},

      {"pristine_images", K::kString, "",
       "directory of pristine candidates, default the well-lit corpus versions"},
      {"patch", K::kInt, "64", "patch side P (even); tiles overlap by P/2 when scoring"},
      {"sharpness_frac", K::kReal, "0.3", "sharpness threshold as a fraction of the maximum"},
      {"colorfulness_frac", K::kReal, "0.8",
       "colorfulness threshold as a fraction of the maximum"},
      {"dims", K::kInt, "0", "PCA dimension D, 0 picks automatically"},
      {"use_sharpness", K::kBool, "true", "apply the sharpness criterion"},
      {"use_colorfulness", K::kBool, "true", "apply the colorfulness criterion"},
      {"global_sharpness", K::kBool, "false", "compare sharpness to the corpus-wide maximum"},
      {"features", K::kString, "msqale", "msqale or nss"},
      {"weights_dir", K::kString, "", "encoder weights, default <run>/weights"},
      {"model", K::kString, "", "pristine model, default <run>/pristine.model"},

      {"images", K::kString, "", "image file or directory to score"},
      {"resize", K::kInt, "0", "scale images so the longer side has this length, 0 keeps them"},

      {"scores", K::kString, "", "scores CSV, default <run>/scores.csv"},
      {"mos", K::kString, "", "MOS CSV, default <run>/mos.csv"},
      {"splits", K::kInt, "100", "scene-disjoint random splits"},
      {"train_fraction", K::kReal, "0.8", "fraction of scenes on the train side"},
      {"logistic", K::kInt, "4", "4 or 5 parameter logistic before PLCC"},

      {"ratings", K::kString, "", "raw ratings CSV"},
      {"consistency_trials", K::kInt, "100", "random halvings for split-half consistency"},
  };
  return keys;
}

const KeySpec& key_spec(const std::string& name) {
  for (const auto& k : config_keys())
    if (k.name == name) return k;
  fail(ErrorCode::kInvalidArgument, "unknown config key '" + name + "'");
}

std::string env_name(const std::string& key) {
  std::string out = "MSQALE_";
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = {k.default_value, "default"};
}

void Config::set(const std::string& key, const std::string& value, const std::string& source) {
  const auto& spec = key_spec(key);
  require(type_ok(spec.type, value), ErrorCode::kInvalidArgument,
          source + ": " + key + " expects " + type_name(spec.type) + ", got '" + value + "'");
  values_[key] = {value, source};
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open config " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    // Trailing comments start at a '#' preceded by whitespace.
    for (std::size_t i = 1; i < t.size(); ++i)
      if (t[i] == '#' && (t[i - 1] == ' ' || t[i - 1] == '\t')) {
        t = trim(t.substr(0, i));
        break;
      }
    const auto eq = t.find('=');
    const std::string where = path.string() + ":" + std::to_string(n);
    if (eq == std::string::npos) fail(ErrorCode::kCorruptData, where + ": expected key = value");
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)), where);
  }
}

void Config::load_env(const EnvLookup& lookup) {
  for (const auto& k : config_keys()) {
    const std::string name = env_name(k.name);
    if (const char* v = lookup(name.c_str())) set(k.name, v, name);
  }
}

const std::string& Config::raw(const std::string& key) const {
  key_spec(key);
  return values_.at(key).value;
}

const std::string& Config::source(const std::string& key) const {
  key_spec(key);
  return values_.at(key).source;
}

long long Config::get_int(const std::string& key) const {
  long long v = 0;
  require(key_spec(key).type == KeyType::kInt && parse_number(raw(key), v),
          ErrorCode::kInvalidArgument, key + " is not an int");
  return v;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  std::uint64_t v = 0;
  require(key_spec(key).type == KeyType::kUint && parse_number(raw(key), v),
          ErrorCode::kInvalidArgument, key + " is not a uint");
  return v;
}

double Config::get_real(const std::string& key) const {
  double v = 0;
  require(key_spec(key).type == KeyType::kReal && parse_real(raw(key), v),
          ErrorCode::kInvalidArgument, key + " is not a real");
  return v;
}

bool Config::get_bool(const std::string& key) const {
  bool v = false;
  require(key_spec(key).type == KeyType::kBool && parse_bool(raw(key), v),
          ErrorCode::kInvalidArgument, key + " is not a bool");
  return v;
}

std::string Config::resolved_text() const {
  std::ostringstream out;
  for (const auto& [key, e] : values_) out << key << " = " << e.value << "  # " << e.source << '\n';
  return out.str();
}

}  // namespace msq
