// Copyright 2026 The hstr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// PNG reading and writing (gray or RGB, 8 or 16 bits per sample). Samples
// are mapped to [0, 1] by dividing by the maximum code value.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hstr/core/tensor.hpp"

namespace hstr {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw InputError("cannot open " + path.string());
  return f;
}

struct RawPng {
  std::uint32_t width = 0, height = 0;
  int channels = 0, bit_depth = 0;
  std::vector<unsigned char> pixels;  // row-major, interleaved, native-endian for 16-bit
};

// Kept free of objects with destructors between setjmp and longjmp.
inline bool read_png_raw(std::FILE* fp, RawPng& raw, std::string& error) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    error = "libpng init failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "corrupt or truncated PNG";
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  raw.width = png_get_image_width(png, info);
  raw.height = png_get_image_height(png, info);
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.pixels.resize(stride * raw.height);
  std::vector<png_bytep> rows(raw.height);
  for (std::uint32_t y = 0; y < raw.height; ++y) rows[y] = raw.pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool write_png_raw(std::FILE* fp, const RawPng& raw, std::string& error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    error = "libpng init failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    error = "PNG encoding failed";
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, raw.width, raw.height, raw.bit_depth,
               raw.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (raw.bit_depth == 16) png_set_swap(png);
  const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels * (raw.bit_depth / 8);
  for (std::uint32_t y = 0; y < raw.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(raw.pixels.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

template <typename T = float>
Frame<T> load_png(const std::filesystem::path& path) {
  auto fp = detail::open_file(path, "rb");
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  std::rewind(fp.get());
  detail::RawPng raw;
  std::string error;
  if (!detail::read_png_raw(fp.get(), raw, error)) throw FormatError(path.string() + ": " + error);
  const auto c = static_cast<std::size_t>(raw.channels);
  Frame<T> out = Frame<T>::raster(c, raw.height, raw.width);
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  if (raw.bit_depth == 16) {
    const auto* px = reinterpret_cast<const std::uint16_t*>(raw.pixels.data());
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) out[ch * n + p] = static_cast<T>(px[p * c + ch] / 65535.0);
  } else {
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) out[ch * n + p] = static_cast<T>(raw.pixels[p * c + ch] / 255.0);
  }
  return out;
}

/// Writes a 1- or 3-channel frame, clamping to [0, 1] and rounding to the nearest code.
template <typename T>
void save_png(const std::filesystem::path& path, const Frame<T>& frame, int bit_depth = 8) {
  require_raster(frame, "save_png");
  if (frame.channels() != 1 && frame.channels() != 3) throw ShapeError("save_png: frame must have 1 or 3 channels");
  if (bit_depth != 8 && bit_depth != 16) throw InputError("save_png: bit depth must be 8 or 16");
  const std::size_t c = frame.channels(), n = frame.plane_size();
  detail::RawPng raw;
  raw.width = static_cast<std::uint32_t>(frame.width());
  raw.height = static_cast<std::uint32_t>(frame.height());
  raw.channels = static_cast<int>(c);
  raw.bit_depth = bit_depth;
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  auto code = [&](T v) {
    const double x = std::isfinite(static_cast<double>(v)) ? std::clamp(static_cast<double>(v), 0.0, 1.0) : 0.0;
    return std::lround(x * maxv);
  };
  if (bit_depth == 16) {
    raw.pixels.resize(n * c * 2);
    auto* px = reinterpret_cast<std::uint16_t*>(raw.pixels.data());
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) px[p * c + ch] = static_cast<std::uint16_t>(code(frame[ch * n + p]));
  } else {
    raw.pixels.resize(n * c);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) raw.pixels[p * c + ch] = static_cast<unsigned char>(code(frame[ch * n + p]));
  }
  auto fp = detail::open_file(path, "wb");
  std::string error;
  if (!detail::write_png_raw(fp.get(), raw, error)) throw FormatError(path.string() + ": " + error);
}

}  // namespace hstr
