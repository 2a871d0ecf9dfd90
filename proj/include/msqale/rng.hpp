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
#include <random>

namespace msq {

/// SplitMix64 finalizer. Used for seed derivation only.
std::uint64_t splitmix64(std::uint64_t x);

/// child_seed = splitmix64(parent ^ splitmix64(index + 1)).
/// Parallel workers never share a generator; they derive one of these.
std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index);

/// Portable seeded generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard <random> distributions are not portable across
/// library implementations, so every conversion to real numbers is done here:
///   uniform()  -- top 53 bits of one draw, scaled to [0, 1)
///   normal()   -- Box-Muller on two uniforms, no cached second value
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n). n must be > 0. Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Generator for the index-th child task.
  SeededRng child(std::uint64_t index) const {
    return SeededRng(child_seed(seed_, index));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Fisher-Yates using SeededRng::below, so shuffles are portable too.
template <typename It>
void shuffle(It first, It last, SeededRng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace msq
