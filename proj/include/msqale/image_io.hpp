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

#include <filesystem>

#include "msqale/image.hpp"

namespace msq {

/// Reads 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or binary
/// PPM (P6). Alpha is dropped, gray is replicated to RGB. Values are scaled
/// by 1/255 or 1/65535.
///
/// Errors: kMissingFile, kUnsupportedFormat, kCorruptData.
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG, or a P6 PPM when the extension is .ppm.
/// Values are clamped to [0,1] and rounded to the nearest level.
/// One-channel images are replicated to gray RGB.
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace msq
