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

// Clip extraction and zoom compensation.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <vector>

#include "hstr/core/resize.hpp"

namespace hstr {

struct ClipRange {
  std::size_t start = 0, length = 0;
  bool operator==(const ClipRange&) const = default;
};

/// Consecutive windows of clip_len frames starting every `stride` frames.
inline std::vector<ClipRange> extract_clips(std::size_t frame_count, std::size_t clip_len, std::size_t stride,
                                            std::ostream* warn = &std::cerr) {
  if (clip_len == 0 || stride == 0) throw InputError("extract_clips: clip length and stride must be positive");
  std::vector<ClipRange> out;
  if (clip_len > frame_count) {
    if (warn) *warn << "warning: clip length " << clip_len << " exceeds the " << frame_count << " available frames\n";
    return out;
  }
  for (std::size_t s = 0; s + clip_len <= frame_count; s += stride) out.push_back({s, clip_len});
  return out;
}

/// `count` windows at uniformly drawn start positions, reproducible per seed.
inline std::vector<ClipRange> extract_random_clips(std::size_t frame_count, std::size_t clip_len, std::size_t count,
                                                   std::uint64_t seed, std::ostream* warn = &std::cerr) {
  if (clip_len == 0) throw InputError("extract_clips: clip length must be positive");
  std::vector<ClipRange> out;
  if (clip_len > frame_count) {
    if (warn) *warn << "warning: clip length " << clip_len << " exceeds the " << frame_count << " available frames\n";
    return out;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> start(0, frame_count - clip_len);
  for (std::size_t i = 0; i < count; ++i) out.push_back({start(rng), clip_len});
  return out;
}

template <typename Item>
std::vector<Item> materialise(const std::vector<Item>& frames, const ClipRange& r) {
  if (r.start + r.length > frames.size()) throw InputError("clip range outside the sequence");
  return std::vector<Item>(frames.begin() + static_cast<std::ptrdiff_t>(r.start),
                           frames.begin() + static_cast<std::ptrdiff_t>(r.start + r.length));
}

struct ZoomSpec {
  double focal_ratio = 1.0;  // r
  std::size_t crop_h = 0, crop_w = 0;
};

/// Top-left corner of a centred crop; odd remainders leave the extra pixel
/// at the bottom/right.
inline std::size_t centre_offset(std::size_t full, std::size_t crop) { return (full - crop) / 2; }

template <typename T>
Tensor<T> centre_crop(const Tensor<T>& img, std::size_t crop_h, std::size_t crop_w) {
  require_raster(img, "centre_crop");
  if (crop_h == 0 || crop_w == 0 || crop_h > img.height() || crop_w > img.width()) {
    throw InputError("crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) + " does not fit in " +
                     std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  const std::size_t oy = centre_offset(img.height(), crop_h), ox = centre_offset(img.width(), crop_w);
  Tensor<T> out = Tensor<T>::raster(img.channels(), crop_h, crop_w);
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t y = 0; y < crop_h; ++y) std::copy_n(&img.at(c, oy + y, ox), crop_w, &out.at(c, y, 0));
  return out;
}

/// Scales the LSR image by the focal-length ratio and keeps the centre patch.
template <typename T>
Frame<T> zoom_compensate(const Frame<T>& img, const ZoomSpec& spec) {
  if (!(spec.focal_ratio > 0) || !std::isfinite(spec.focal_ratio)) throw InputError("zoom: focal ratio must be positive");
  const auto h = static_cast<std::size_t>(std::lround(spec.focal_ratio * static_cast<double>(img.height())));
  const auto w = static_cast<std::size_t>(std::lround(spec.focal_ratio * static_cast<double>(img.width())));
  if (spec.crop_h > h || spec.crop_w > w) {
    throw InputError("zoom: crop " + std::to_string(spec.crop_h) + "x" + std::to_string(spec.crop_w) +
                     " exceeds the upscaled " + std::to_string(h) + "x" + std::to_string(w));
  }
  const Frame<T> up = (h == img.height() && w == img.width()) ? img : resize_bicubic(img, h, w);
  return centre_crop(up, spec.crop_h, spec.crop_w);
}

}  // namespace hstr
