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

// Procedural stereo scene with exactly known geometry: a textured background
// plane and a textured square in front of it, each translating at its own
// constant velocity and sitting at its own disparity. Textures are smooth
// analytic functions, so every view renders without resampling and the
// flows and disparities of the visible surface are exact.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "hstr/datasim/degrade.hpp"
#include "hstr/datasim/sequence.hpp"

namespace hstr {

struct SynthSpec {
  std::size_t height = 32, width = 32;
  std::size_t frames = 3;
  std::size_t scale = 4;     // LSR reduction
  std::size_t interval = 2;  // HSR frame spacing
  std::array<double, 2> bg_velocity{0.75, 0.25};
  std::array<double, 2> fg_velocity{-1.0, 0.5};
  double bg_disparity = 1.5;
  double fg_disparity = 3.0;
  double fg_size = 0.4;  // square edge as a fraction of min(height, width)
  std::uint64_t seed = 1;
};

namespace detail {

// Sum of three oriented sinusoids per channel.
struct SynthTexture {
  std::array<std::array<std::array<double, 4>, 3>, 3> waves{};  // [channel][wave] = {kx, ky, phase, amp}
  double base = 0.5;

  double operator()(std::size_t c, double x, double y) const {
    double v = base;
    for (const auto& w : waves[c]) v += w[3] * std::sin(w[0] * x + w[1] * y + w[2]);
    return v;
  }
};

inline SynthTexture make_texture(std::mt19937_64& rng, double base) {
  std::uniform_real_distribution<double> freq(0.15, 0.9), angle(0.0, 2 * std::numbers::pi), phase(0.0, 2 * std::numbers::pi);
  SynthTexture t;
  t.base = base;
  const std::array<double, 3> amp{0.16, 0.1, 0.06};
  for (auto& ch : t.waves)
    for (std::size_t i = 0; i < 3; ++i) {
      const double f = freq(rng), a = angle(rng);
      ch[i] = {f * std::cos(a), f * std::sin(a), phase(rng), amp[i]};
    }
  return t;
}

}  // namespace detail

template <typename T>
class SynthScene {
 public:
  explicit SynthScene(SynthSpec spec) : spec_(spec) {
    if (spec.height == 0 || spec.width == 0 || spec.frames < 2 || spec.interval == 0 || spec.scale == 0) {
      throw InputError("synth: dimensions, frame count, interval and scale must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    bg_ = detail::make_texture(rng, 0.45);
    fg_ = detail::make_texture(rng, 0.55);
    const double side = spec.fg_size * static_cast<double>(std::min(spec.height, spec.width));
    fg_side_ = side;
    fg_origin_ = {0.5 * (static_cast<double>(spec.width) - side), 0.5 * (static_cast<double>(spec.height) - side)};
  }

  const SynthSpec& spec() const { return spec_; }

  /// Whether the left-view pixel (x, y) at time k sees the foreground.
  bool foreground(double x, double y, double k) const {
    const double u = x - fg_origin_[0] - k * spec_.fg_velocity[0];
    const double v = y - fg_origin_[1] - k * spec_.fg_velocity[1];
    return u >= 0 && u < fg_side_ && v >= 0 && v < fg_side_;
  }

  Frame<T> render(bool right, double k) const {
    Frame<T> f = Frame<T>::raster(3, spec_.height, spec_.width);
    for (std::size_t y = 0; y < spec_.height; ++y)
      for (std::size_t x = 0; x < spec_.width; ++x) {
        // A right-view pixel shows the surface point whose left-view position is x - d.
        const double xf = static_cast<double>(x) - (right ? spec_.fg_disparity : 0.0);
        const double xb = static_cast<double>(x) - (right ? spec_.bg_disparity : 0.0);
        const double yy = static_cast<double>(y);
        const bool fg = foreground(xf, yy, k);
        const auto& vel = fg ? spec_.fg_velocity : spec_.bg_velocity;
        const double sx = (fg ? xf : xb) - k * vel[0], sy = yy - k * vel[1];
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = fg ? fg_(c, sx, sy) : bg_(c, sx, sy);
          f.at(c, y, x) = static_cast<T>(std::clamp(v, 0.0, 1.0));
        }
      }
    return f;
  }

  /// Per-pixel displacement field: `steps` times the velocity of the surface
  /// visible at each pixel of the given view at time k.
  FlowField<T> motion(bool right, double k, double steps) const {
    FlowField<T> f = FlowField<T>::raster(2, spec_.height, spec_.width);
    for (std::size_t y = 0; y < spec_.height; ++y)
      for (std::size_t x = 0; x < spec_.width; ++x) {
        const double xf = static_cast<double>(x) - (right ? spec_.fg_disparity : 0.0);
        const auto& vel = foreground(xf, static_cast<double>(y), k) ? spec_.fg_velocity : spec_.bg_velocity;
        f.at(0, y, x) = static_cast<T>(steps * vel[0]);
        f.at(1, y, x) = static_cast<T>(steps * vel[1]);
      }
    return f;
  }

  DisparityMap<T> disparity(double k) const {
    DisparityMap<T> d = DisparityMap<T>::raster(1, spec_.height, spec_.width);
    for (std::size_t y = 0; y < spec_.height; ++y)
      for (std::size_t x = 0; x < spec_.width; ++x)
        d.at(0, y, x) = static_cast<T>(foreground(static_cast<double>(x), static_cast<double>(y), k)
                                           ? spec_.fg_disparity
                                           : spec_.bg_disparity);
    return d;
  }

  /// Exact estimator inputs for the segment starting at frame `start`.
  EstimatorInputs<T> estimators(std::size_t start) const {
    const double a = static_cast<double>(start), m = static_cast<double>(spec_.interval);
    EstimatorInputs<T> e;
    e.d0 = disparity(a);
    e.dT = disparity(a + m);
    for (std::size_t t = 0; t <= spec_.interval; ++t) {
      const double tt = static_cast<double>(t);
      e.flow_l_to_0.push_back(motion(false, a + tt, -tt));
      e.flow_l_to_T.push_back(motion(false, a + tt, m - tt));
    }
    e.flow_r_0_to_T = motion(true, a, m);
    e.flow_r_T_to_0 = motion(true, a + m, -m);
    return e;
  }

  /// Ground truth, degraded streams and exact geometry for every segment.
  Sequence<T> sequence() const {
    Sequence<T> seq;
    seq.interval = spec_.interval;
    seq.scale = spec_.scale;
    for (std::size_t k = 0; k < spec_.frames; ++k) {
      seq.gt_left.push_back(render(false, static_cast<double>(k)));
      seq.gt_right.push_back(render(true, static_cast<double>(k)));
    }
    DegradeSpec d;
    d.spatial_factor = spec_.scale;
    d.temporal_factor = spec_.interval;
    auto deg = degrade(seq.gt_left, seq.gt_right, d);
    seq.lsr = std::move(deg.lsr);
    for (std::size_t i = 0; i < deg.hsr_indices.size(); ++i) seq.hsr[deg.hsr_indices[i]] = std::move(deg.hsr[i]);
    for (std::size_t i : deg.lsr_source) seq.lsr_timestamps.push_back(static_cast<double>(i));
    return seq;
  }

  std::vector<TrainSample<T>> samples() const {
    const Sequence<T> seq = sequence();
    std::vector<TrainSample<T>> out;
    for (std::size_t k = 0; k < seq.segment_count(); ++k) out.push_back(seq.sample(k, estimators(k * spec_.interval)));
    return out;
  }

 private:
  SynthSpec spec_;
  detail::SynthTexture bg_, fg_;
  double fg_side_ = 0;
  std::array<double, 2> fg_origin_{};
};

}  // namespace hstr
