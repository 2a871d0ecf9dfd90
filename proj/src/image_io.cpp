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

#include "msqale/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "msqale/error.hpp"

namespace msq {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- PPM ---------------------------------------------------------------

Image decode_ppm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 2;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_ws();
    long v = 0;
    int digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      if (++digits > 9) fail(ErrorCode::kCorruptData, name + ": PPM header value too large");
    }
    if (digits == 0) fail(ErrorCode::kCorruptData, name + ": malformed PPM header");
    return v;
  };
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    fail(ErrorCode::kCorruptData, name + ": invalid PPM dimensions or maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    fail(ErrorCode::kCorruptData, name + ": missing PPM header terminator");
  ++pos;
  const int bpv = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * 3 * bpv;
  if (bytes.size() - pos < need)
    fail(ErrorCode::kCorruptData, name + ": PPM pixel data truncated");
  // 8-bit data uses its own maxval; the 1/65535 rule covers 16-bit files.
  const double scale = 1.0 / static_cast<double>(maxval);
  Image img(static_cast<int>(w), static_cast<int>(h), 3);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        unsigned v = bytes[pos];
        if (bpv == 2) v = (v << 8) | bytes[pos + 1];
        pos += bpv;
        img.at(c, static_cast<int>(y), static_cast<int>(x)) =
            std::min(1.0, v * scale);
      }
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * 3);
  const int src_c = img.channels();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(src_c == 3 ? c : 0, y, x), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(ErrorCode::kUnwritablePath, "write failed for " + path.string());
}

// --- PNG ---------------------------------------------------------------

struct PngErrorJump {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngErrorJump*>(png_get_error_ptr(png));
  err->message = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

Image decode_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorCode::kMissingFile, "cannot open " + path.string());

  PngErrorJump err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCode::kCorruptData, "libpng initialisation failed");
  }
  // Anything touched after setjmp must outlive the longjmp target.
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int bit_depth = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kCorruptData, path.string() + ": " + err.message);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // host little-endian after this
  png_read_update_info(png, info);

  const int out_depth = png_get_bit_depth(png, info);
  const int out_channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (out_channels != 3 || (out_depth != 8 && out_depth != 16))
    fail(ErrorCode::kUnsupportedFormat, path.string() + ": unsupported PNG layout");

  Image img(static_cast<int>(w), static_cast<int>(h), 3);
  const double scale = out_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
  for (png_uint_32 y = 0; y < h; ++y)
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        unsigned v;
        if (out_depth == 16) {
          const png_byte* p = rows[y] + (x * 3 + c) * 2;
          v = static_cast<unsigned>(p[0]) | (static_cast<unsigned>(p[1]) << 8);
        } else {
          v = rows[y][x * 3 + c];
        }
        img.at(c, static_cast<int>(y), static_cast<int>(x)) = v * scale;
      }
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorCode::kUnwritablePath, "cannot write " + path.string());

  const int src_c = img.channels();
  std::vector<png_byte> buffer(static_cast<std::size_t>(img.width()) * img.height() * 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(src_c == 3 ? c : 0, y, x), 0.0, 1.0);
        buffer[(static_cast<std::size_t>(y) * img.width() + x) * 3 + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y)
    rows[y] = buffer.data() + static_cast<std::size_t>(y) * img.width() * 3;

  PngErrorJump err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::kUnwritablePath, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kUnwritablePath, path.string() + ": " + err.message);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

bool has_ext(const std::filesystem::path& p, const char* ext) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return e == ext;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::kMissingFile, "no such file: " + path.string());
  std::array<unsigned char, 8> sig{};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path.string());
    in.read(reinterpret_cast<char*>(sig.data()), sig.size());
    if (in.gcount() < 2) fail(ErrorCode::kCorruptData, path.string() + ": file too short");
  }
  if (png_sig_cmp(sig.data(), 0, 8) == 0) return decode_png(path);
  if (sig[0] == 'P' && sig[1] == '6') return decode_ppm(read_all(path), path.string());
  fail(ErrorCode::kUnsupportedFormat, path.string() + ": not a PNG or P6 PPM");
}

void save_image(const Image& img, const std::filesystem::path& path) {
  require(img.channels() == 3 || img.channels() == 1, ErrorCode::kShapeMismatch,
          "save_image needs 1 or 3 channels");
  require(!img.empty(), ErrorCode::kInvalidArgument, "cannot save an empty image");
  if (has_ext(path, ".ppm")) {
    write_ppm(img, path);
  } else {
    write_png(img, path);
  }
}

}  // namespace msq
