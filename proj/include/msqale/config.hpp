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
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace msq {

enum class KeyType { kInt, kUint, kReal, kBool, kString };

struct KeySpec {
  std::string name;
  KeyType type;
  std::string default_value;
  std::string help;
};

/// Every recognised key, in documentation order.
const std::vector<KeySpec>& config_keys();
const KeySpec& key_spec(const std::string& name);  // throws kInvalidArgument

/// Flat typed key/value configuration. Later layers override earlier ones:
/// built-in defaults, then the config file, then MSQALE_<KEY> environment
/// variables, then command-line flags.
class Config {
 public:
  Config();

  /// Throws kInvalidArgument for an unknown key or a value of the wrong type.
  void set(const std::string& key, const std::string& value, const std::string& source);

  /// `key = value` lines; blank lines and '#' comments are ignored.
  void load_file(const std::filesystem::path& path);

  using EnvLookup = std::function<const char*(const char*)>;
  void load_env(const EnvLookup& lookup);

  const std::string& raw(const std::string& key) const;
  const std::string& source(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const { return raw(key); }

  /// Every key as `key = value  # source`, sorted by key.
  std::string resolved_text() const;

 private:
  struct Entry {
    std::string value;
    std::string source;
  };
  std::map<std::string, Entry> values_;
};

/// Environment variable consulted for `key`: MSQALE_ plus the key upper-cased.
std::string env_name(const std::string& key);

}  // namespace msq
