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

// Middlebury .flo optical flow and PFM disparity files.
//
// .flo: float32 magic 202021.25 ("PIEH"), int32 width, int32 height, then
// width*height interleaved (u, v) float32 pairs, row-major, little-endian.
// Values above 1e9 mark unknown flow in some datasets; they are rejected.
//
// PFM: "Pf" (one channel) or "PF" (three channels), width, height and a
// scale whose sign gives the byte order (negative = little-endian). Rows
// are stored bottom-to-top.

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hstr/core/tensor.hpp"

namespace hstr {

namespace detail {

inline std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

template <typename U>
U load_scalar(const char* p, bool little_endian) {
  std::array<char, sizeof(U)> b;
  std::memcpy(b.data(), p, sizeof(U));
  if (little_endian != (std::endian::native == std::endian::little)) std::reverse(b.begin(), b.end());
  U v;
  std::memcpy(&v, b.data(), sizeof(U));
  return v;
}

template <typename U>
void store_scalar(std::vector<char>& out, U v) {
  std::array<char, sizeof(U)> b;
  std::memcpy(b.data(), &v, sizeof(U));
  if constexpr (std::endian::native != std::endian::little) std::reverse(b.begin(), b.end());
  out.insert(out.end(), b.begin(), b.end());
}

}  // namespace detail

constexpr float kFloMagic = 202021.25f;
constexpr double kUnknownFlowThreshold = 1e9;

template <typename T = float>
FlowField<T> decode_flo(const std::vector<char>& bytes, const std::string& name = "<memory>") {
  if (bytes.size() < 12) throw FormatError(name + ": truncated .flo header");
  if (detail::load_scalar<float>(bytes.data(), true) != kFloMagic) {
    throw FormatError(name + ": bad .flo magic (expected PIEH)");
  }
  const auto w = detail::load_scalar<std::int32_t>(bytes.data() + 4, true);
  const auto h = detail::load_scalar<std::int32_t>(bytes.data() + 8, true);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) throw FormatError(name + ": implausible .flo dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < 12 + n * 8) throw FormatError(name + ": truncated .flo payload");
  FlowField<T> flow = FlowField<T>::raster(2, static_cast<std::size_t>(h), static_cast<std::size_t>(w));
  const char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      const float v = detail::load_scalar<float>(p + (i * 2 + c) * 4, true);
      if (!std::isfinite(v)) throw FormatError(name + ": non-finite flow value");
      if (std::abs(v) > kUnknownFlowThreshold) {
        throw FormatError(name + ": unknown-flow sentinel at pixel " + std::to_string(i) + " is not supported");
      }
      flow[c * n + i] = static_cast<T>(v);
    }
  }
  return flow;
}

template <typename T>
std::vector<char> encode_flo(const FlowField<T>& flow) {
  require_channels(flow, 2, "encode_flo");
  const std::size_t n = flow.plane_size();
  std::vector<char> out;
  out.reserve(12 + n * 8);
  detail::store_scalar(out, kFloMagic);
  detail::store_scalar(out, static_cast<std::int32_t>(flow.width()));
  detail::store_scalar(out, static_cast<std::int32_t>(flow.height()));
  for (std::size_t i = 0; i < n; ++i) {
    detail::store_scalar(out, static_cast<float>(flow[i]));
    detail::store_scalar(out, static_cast<float>(flow[n + i]));
  }
  return out;
}

template <typename T = float>
FlowField<T> load_flo(const std::filesystem::path& path) {
  return decode_flo<T>(detail::read_bytes(path), path.string());
}

template <typename T>
void save_flo(const std::filesystem::path& path, const FlowField<T>& flow) {
  detail::write_bytes(path, encode_flo(flow));
}

template <typename T = float>
Tensor<T> decode_pfm(const std::vector<char>& bytes, const std::string& name = "<memory>") {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  };
  auto token = [&] {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.data() + start, pos - start);
  };
  const std::string magic = token();
  std::size_t channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw FormatError(name + ": bad PFM magic");
  }
  long w = 0, h = 0;
  try {
    w = std::stol(token());
    h = std::stol(token());
  } catch (const std::exception&) {
    throw FormatError(name + ": malformed PFM dimensions");
  }
  const std::string scale_tok = token();
  double scale = 0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw FormatError(name + ": malformed PFM scale");
  }
  if (w <= 0 || h <= 0 || scale == 0.0) throw FormatError(name + ": invalid PFM header");
  if (pos >= bytes.size()) throw FormatError(name + ": truncated PFM payload");
  ++pos;  // single whitespace byte after the scale
  const bool little = scale < 0;
  const std::size_t uw = static_cast<std::size_t>(w), uh = static_cast<std::size_t>(h);
  const std::size_t count = uw * uh * channels;
  if (bytes.size() - pos < count * 4) throw FormatError(name + ": truncated PFM payload");
  Tensor<T> out = Tensor<T>::raster(channels, uh, uw);
  for (std::size_t row = 0; row < uh; ++row) {
    const std::size_t y = uh - 1 - row;
    for (std::size_t x = 0; x < uw; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const float v = detail::load_scalar<float>(bytes.data() + pos + ((row * uw + x) * channels + c) * 4, little);
        if (!std::isfinite(v)) throw FormatError(name + ": non-finite PFM sample");
        out.at(c, y, x) = static_cast<T>(v);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<char> encode_pfm(const Tensor<T>& map) {
  require_raster(map, "encode_pfm");
  if (map.channels() != 1 && map.channels() != 3) throw ShapeError("encode_pfm: 1 or 3 channels required");
  const std::string header = std::string(map.channels() == 1 ? "Pf" : "PF") + "\n" + std::to_string(map.width()) +
                             " " + std::to_string(map.height()) + "\n-1.0\n";
  std::vector<char> out(header.begin(), header.end());
  for (std::size_t row = 0; row < map.height(); ++row) {
    const std::size_t y = map.height() - 1 - row;
    for (std::size_t x = 0; x < map.width(); ++x)
      for (std::size_t c = 0; c < map.channels(); ++c) detail::store_scalar(out, static_cast<float>(map.at(c, y, x)));
  }
  return out;
}

template <typename T = float>
DisparityMap<T> load_pfm(const std::filesystem::path& path) {
  return decode_pfm<T>(detail::read_bytes(path), path.string());
}

template <typename T>
void save_pfm(const std::filesystem::path& path, const Tensor<T>& map) {
  detail::write_bytes(path, encode_pfm(map));
}

}  // namespace hstr
