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

// Hybrid-camera simulation from a ground-truth stereo sequence: the left
// view loses spatial resolution, the right view loses frame rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hstr/core/resize.hpp"

namespace hstr {

struct DegradeSpec {
  std::size_t spatial_factor = 4;   // s
  std::size_t temporal_factor = 4;  // m
  double noise_sigma = 0;           // 8-bit units, added to the LSR view
  std::size_t blur_tau = 1;         // HSR temporal averaging window
  long desync = 0;                  // LSR index offset in frames
  std::uint64_t seed = 0;

  void validate() const {
    if (spatial_factor == 0 || temporal_factor == 0) throw InputError("degrade: factors must be positive");
    if (!std::isfinite(noise_sigma) || noise_sigma < 0) throw InputError("degrade: noise sigma must be >= 0");
    if (blur_tau == 0 || blur_tau % 2 == 0) throw InputError("degrade: blur window must be odd");
  }
};

template <typename T>
struct DegradedSequence {
  std::vector<Frame<T>> lsr;             // every frame, spatially reduced
  std::vector<Frame<T>> hsr;             // frames at hsr_indices
  std::vector<std::size_t> hsr_indices;  // 0, m, 2m, ...
  std::vector<std::size_t> lsr_source;   // ground-truth index each LSR frame came from
};

/// Source index of frame i after shifting a stream of n frames by k,
/// clamped to the available range.
inline std::vector<std::size_t> desync_index_map(std::size_t n, long k) {
  std::vector<std::size_t> map(n);
  const long hi = static_cast<long>(n) - 1;
  for (std::size_t i = 0; i < n; ++i) map[i] = static_cast<std::size_t>(std::clamp(static_cast<long>(i) + k, 0L, hi));
  return map;
}

template <typename Item>
std::vector<Item> desync(const std::vector<Item>& stream, long k) {
  std::vector<Item> out;
  out.reserve(stream.size());
  for (std::size_t i : desync_index_map(stream.size(), k)) out.push_back(stream[i]);
  return out;
}

/// Frame i replaced by the mean of the window of tau frames centred on it;
/// the window is truncated at the ends of the sequence.
template <typename T>
Frame<T> temporal_blur(const std::vector<Frame<T>>& frames, std::size_t i, std::size_t tau) {
  if (i >= frames.size()) throw InputError("temporal_blur: index out of range");
  if (tau % 2 == 0) throw InputError("temporal_blur: window must be odd");
  const std::size_t half = tau / 2;
  const std::size_t lo = i >= half ? i - half : 0, hi = std::min(frames.size() - 1, i + half);
  if (lo == hi) return frames[i];
  Frame<T> out(frames[i].shape());
  for (std::size_t j = lo; j <= hi; ++j) {
    Tensor<T>::require_same_shape(out, frames[j], "temporal_blur");
    out += frames[j];
  }
  out *= T(1) / static_cast<T>(hi - lo + 1);
  return out;
}

/// i.i.d. Gaussian noise of standard deviation sigma/255, clamped to [0, 1].
template <typename T>
Frame<T> add_noise(Frame<T> f, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0) return f;
  std::normal_distribution<double> dist(0.0, sigma / 255.0);
  for (auto& v : f.data()) v = std::clamp(static_cast<T>(v + dist(rng)), T(0), T(1));
  return f;
}

template <typename T>
Frame<T> downscale(const Frame<T>& f, std::size_t s) {
  if (f.height() % s != 0 || f.width() % s != 0) {
    throw InputError("degrade: " + std::to_string(f.height()) + "x" + std::to_string(f.width()) +
                     " is not divisible by " + std::to_string(s));
  }
  if (s == 1) return f;
  return resize_bicubic(f, f.height() / s, f.width() / s);
}

template <typename T>
DegradedSequence<T> degrade(const std::vector<Frame<T>>& gt_left, const std::vector<Frame<T>>& gt_right,
                            const DegradeSpec& spec) {
  spec.validate();
  if (gt_left.size() != gt_right.size()) throw InputError("degrade: views differ in length");
  if (gt_left.size() < spec.temporal_factor + 1) {
    throw InputError("degrade: " + std::to_string(gt_left.size()) + " frames is too short for temporal factor " +
                     std::to_string(spec.temporal_factor));
  }
  for (std::size_t i = 0; i < gt_left.size(); ++i) {
    require_channels(gt_left[i], 3, "degrade left frame");
    Tensor<T>::require_same_shape(gt_left[i], gt_right[i], "degrade stereo pair");
    Tensor<T>::require_same_shape(gt_left[0], gt_left[i], "degrade sequence");
  }
  DegradedSequence<T> out;
  std::mt19937_64 rng(spec.seed);
  out.lsr_source = desync_index_map(gt_left.size(), spec.desync);
  for (std::size_t src : out.lsr_source) {
    out.lsr.push_back(add_noise(downscale(gt_left[src], spec.spatial_factor), spec.noise_sigma, rng));
  }
  for (std::size_t i = 0; i < gt_right.size(); i += spec.temporal_factor) {
    out.hsr_indices.push_back(i);
    out.hsr.push_back(temporal_blur(gt_right, i, spec.blur_tau));
  }
  return out;
}

}  // namespace hstr
