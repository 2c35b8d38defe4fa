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

// Geometric and photometric augmentation of training samples. Geometry is
// kept consistent across views: a horizontal flip negates disparities and
// horizontal flow, a vertical flip negates vertical flow, and reversing time
// swaps the endpoint roles.

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>

#include "hstr/datasim/degrade.hpp"
#include "hstr/pipeline/clip.hpp"

namespace hstr {

template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& t) {
  require_raster(t, "flip_horizontal");
  Tensor<T> out(t.shape());
  for (std::size_t c = 0; c < t.channels(); ++c)
    for (std::size_t y = 0; y < t.height(); ++y)
      std::reverse_copy(&t.at(c, y, 0), &t.at(c, y, 0) + t.width(), &out.at(c, y, 0));
  return out;
}

template <typename T>
Tensor<T> flip_vertical(const Tensor<T>& t) {
  require_raster(t, "flip_vertical");
  Tensor<T> out(t.shape());
  for (std::size_t c = 0; c < t.channels(); ++c)
    for (std::size_t y = 0; y < t.height(); ++y)
      std::copy_n(&t.at(c, t.height() - 1 - y, 0), t.width(), &out.at(c, y, 0));
  return out;
}

namespace detail {

template <typename T>
void negate_channel(Tensor<T>& t, std::size_t c) {
  for (auto& v : t.plane(c)) v = -v;
}

template <typename T, typename F>
void for_each_frame(TrainSample<T>& s, F&& f) {
  for (auto& x : s.clip.lsr_frames) f(x);
  for (auto& x : s.clip.hsr_endpoints) f(x);
  for (auto& x : s.gt_left) f(x);
  for (auto& x : s.gt_right) f(x);
}

template <typename T, typename F>
void for_each_flow(EstimatorInputs<T>& e, F&& f) {
  for (auto& x : e.flow_l_to_0) f(x);
  for (auto& x : e.flow_l_to_T) f(x);
  f(e.flow_r_0_to_T);
  f(e.flow_r_T_to_0);
}

}  // namespace detail

template <typename T>
TrainSample<T> flip_horizontal(TrainSample<T> s) {
  detail::for_each_frame(s, [](Frame<T>& f) { f = flip_horizontal(f); });
  detail::for_each_flow(s.est, [](FlowField<T>& f) {
    f = flip_horizontal(f);
    detail::negate_channel(f, 0);
  });
  for (auto* d : {&s.est.d0, &s.est.dT}) {
    *d = flip_horizontal(*d);
    detail::negate_channel(*d, 0);
  }
  return s;
}

template <typename T>
TrainSample<T> flip_vertical(TrainSample<T> s) {
  detail::for_each_frame(s, [](Frame<T>& f) { f = flip_vertical(f); });
  detail::for_each_flow(s.est, [](FlowField<T>& f) {
    f = flip_vertical(f);
    detail::negate_channel(f, 1);
  });
  for (auto* d : {&s.est.d0, &s.est.dT}) *d = flip_vertical(*d);
  return s;
}

template <typename T>
TrainSample<T> reverse_time(TrainSample<T> s) {
  std::reverse(s.clip.lsr_frames.begin(), s.clip.lsr_frames.end());
  std::swap(s.clip.hsr_endpoints[0], s.clip.hsr_endpoints[1]);
  std::reverse(s.gt_left.begin(), s.gt_left.end());
  std::reverse(s.gt_right.begin(), s.gt_right.end());
  auto& e = s.est;
  std::swap(e.d0, e.dT);
  // New flow from t to 0 is the old flow from T - t to T, and vice versa.
  std::reverse(e.flow_l_to_0.begin(), e.flow_l_to_0.end());
  std::reverse(e.flow_l_to_T.begin(), e.flow_l_to_T.end());
  std::swap(e.flow_l_to_0, e.flow_l_to_T);
  std::swap(e.flow_r_0_to_T, e.flow_r_T_to_0);
  return s;
}

/// Per-channel gain and offset, clamped to [0, 1].
template <typename T>
Frame<T> colour_jitter(Frame<T> f, const std::vector<double>& gain, const std::vector<double>& offset) {
  for (std::size_t c = 0; c < f.channels(); ++c)
    for (auto& v : f.plane(c))
      v = std::clamp(static_cast<T>(gain.at(c) * static_cast<double>(v) + offset.at(c)), T(0), T(1));
  return f;
}

struct AugmentSpec {
  bool allow_hflip = true;
  bool allow_vflip = true;
  bool allow_reverse = true;
  double max_noise_sigma = 5.0;  // 8-bit units
  double gain_low = 0.9, gain_high = 1.1;
  double offset_range = 0.02;
};

/// Random augmentation: each flip and the time reversal with probability
/// 1/2, then noise and colour jitter on the LSR view.
template <typename T>
TrainSample<T> augment(TrainSample<T> s, std::uint64_t seed, const AugmentSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  if (spec.allow_hflip && coin(rng)) s = flip_horizontal(std::move(s));
  if (spec.allow_vflip && coin(rng)) s = flip_vertical(std::move(s));
  if (spec.allow_reverse && coin(rng)) s = reverse_time(std::move(s));
  const double sigma = std::uniform_real_distribution<double>(0.0, spec.max_noise_sigma)(rng);
  std::uniform_real_distribution<double> gain(spec.gain_low, spec.gain_high);
  std::uniform_real_distribution<double> offset(-spec.offset_range, spec.offset_range);
  std::vector<double> g(3), o(3);
  for (std::size_t c = 0; c < 3; ++c) {
    g[c] = gain(rng);
    o[c] = offset(rng);
  }
  for (auto& f : s.clip.lsr_frames) f = colour_jitter(add_noise(std::move(f), sigma, rng), g, o);
  return s;
}

}  // namespace hstr
