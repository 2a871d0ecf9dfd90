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

// Regenerates data/toy: four synthetic base scenes, a small distorted test
// set, and simulated ratings from ten subjects.
//
//   make_toy_set <output dir>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "msqale/corpus.hpp"
#include "msqale/image_io.hpp"
#include "msqale/rng.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_set <output dir>\n";
    return 2;
  }
  const fs::path root = argv[1];
  fs::create_directories(root / "bases");
  fs::create_directories(root / "test");

  constexpr int kScenes = 4;
  constexpr int kSide = 128;
  constexpr int kSubjects = 10;
  struct Ladder {
    msq::DistortionKind kind;
    const char* tag;
    double weight;  // how strongly simulated viewers penalize it
  };
  const Ladder ladders[] = {{msq::DistortionKind::kGaussianNoise, "noise", 70.0},
                            {msq::DistortionKind::kGaussianBlur, "blur", 55.0},
                            {msq::DistortionKind::kGammaUnder, "dark", 60.0}};

  struct Item {
    std::string id;
    std::string scene;
    double quality;
  };
  std::vector<Item> items;
  const msq::SeededRng root_rng(20261019);
  for (int s = 0; s < kScenes; ++s) {
    const std::string scene = "toy" + std::to_string(s);
    msq::SeededRng rng = root_rng.child(static_cast<std::uint64_t>(s));
    const msq::Image base = msq::synthesize_scene(kSide, kSide, rng);
    msq::save_image(base, root / "bases" / (scene + ".png"));
    msq::save_image(base, root / "test" / (scene + "_clean.png"));
    items.push_back({scene + "_clean", scene, 90.0});
    for (const auto& l : ladders) {
      const auto ladder = msq::distortion_ladder(base, l.kind, 4, 100 + s);
      for (int k = 1; k < 4; ++k) {
        const std::string id = scene + "_" + l.tag + std::to_string(k);
        msq::save_image(ladder[k], root / "test" / (id + ".png"));
        items.push_back({id, scene, 90.0 - l.weight * k / 3.0});
      }
    }
  }

  std::ofstream csv(root / "ratings.csv");
  csv << "subject_id,session_id,image_id,scene_id,score\n";
  msq::SeededRng rater = root_rng.child(1000);
  for (int j = 0; j < kSubjects; ++j) {
    const double offset = rater.normal(0.0, 5.0);
    const double gain = rater.uniform(0.8, 1.2);
    char subject[16];
    std::snprintf(subject, sizeof subject, "subj%02d", j);
    for (const auto& it : items) {
      const double raw = 50.0 + gain * (it.quality - 50.0) + offset + rater.normal(0.0, 6.0);
      const double score = std::clamp(std::round(raw), 0.0, 100.0);
      csv << subject << ",s1," << it.id << ',' << it.scene << ',' << score << '\n';
    }
  }
  std::cout << "wrote " << items.size() << " test images for " << kScenes << " scenes to "
            << root.string() << '\n';
  return 0;
}
