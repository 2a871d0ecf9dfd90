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

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "msqale/error.hpp"
#include "msqale/image.hpp"
#include "msqale/rng.hpp"

namespace msq::testing {

inline Image random_image(int w, int h, int c, SeededRng& rng, double lo = 0.0,
                          double hi = 1.0) {
  Image img(w, h, c);
  for (auto& v : img.data()) v = rng.uniform(lo, hi);
  return img;
}

inline Image random_image(int w, int h, int c, std::uint64_t seed, double lo = 0.0,
                          double hi = 1.0) {
  SeededRng rng(seed);
  return random_image(w, h, c, rng, lo, hi);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("msqale_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path source_dir() {
  const char* s = std::getenv("MSQALE_SOURCE_DIR");
  return s ? std::filesystem::path(s) : std::filesystem::current_path();
}

template <typename F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(-1);
}

}  // namespace msq::testing
