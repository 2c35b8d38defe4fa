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

// Image, flow and disparity warping with analytic gradients.
//
// Conventions:
//  * A flow vector (dx, dy) at pixel p points from p to where p's content
//    is found (backward warp) or goes (forward splat).
//  * A disparity d at left-view pixel x corresponds to right-view pixel
//    x + d on the same row, so disparity_to_flow(d, +1) both samples the
//    right view from the left grid and splats the left view onto the right.
//  * Backward warps clamp sample positions to the frame; forward splats
//    drop contributions that land outside it.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <variant>

#include "hstr/core/tensor.hpp"

namespace hstr {

/// Targets whose splat coverage does not exceed this are holes.
inline constexpr double kSplatEpsilon = 1e-7;

namespace detail {

template <typename T>
struct BilinearTap {
  std::size_t x0, x1, y0, y1;
  T fx, fy;
  bool free_x, free_y;  // false where the coordinate was clamped to the border
};

template <typename T>
BilinearTap<T> clamped_tap(T sx, T sy, std::size_t w, std::size_t h) {
  const T maxx = static_cast<T>(w - 1), maxy = static_cast<T>(h - 1);
  BilinearTap<T> tap{};
  tap.free_x = sx > T(0) && sx < maxx;
  tap.free_y = sy > T(0) && sy < maxy;
  sx = std::clamp(sx, T(0), maxx);
  sy = std::clamp(sy, T(0), maxy);
  const T flx = std::floor(sx), fly = std::floor(sy);
  tap.x0 = static_cast<std::size_t>(flx);
  tap.y0 = static_cast<std::size_t>(fly);
  tap.x1 = std::min(tap.x0 + 1, w - 1);
  tap.y1 = std::min(tap.y0 + 1, h - 1);
  tap.fx = sx - flx;
  tap.fy = sy - fly;
  return tap;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Backward warping

/// out(x, y) = src sampled bilinearly at (x + dx, y + dy), border-clamped.
template <typename T>
Frame<T> backward_warp(const Frame<T>& src, const FlowField<T>& flow) {
  require_channels(flow, 2, "backward_warp flow");
  require_same_extent(src, flow, "backward_warp");
  const std::size_t c = src.channels(), h = src.height(), w = src.width();
  Frame<T> out = Frame<T>::raster(c, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto tap = detail::clamped_tap(static_cast<T>(x) + flow.at(0, y, x), static_cast<T>(y) + flow.at(1, y, x), w, h);
      const T w00 = (1 - tap.fx) * (1 - tap.fy), w01 = tap.fx * (1 - tap.fy);
      const T w10 = (1 - tap.fx) * tap.fy, w11 = tap.fx * tap.fy;
      for (std::size_t ch = 0; ch < c; ++ch) {
        out.at(ch, y, x) = w00 * src.at(ch, tap.y0, tap.x0) + w01 * src.at(ch, tap.y0, tap.x1) +
                           w10 * src.at(ch, tap.y1, tap.x0) + w11 * src.at(ch, tap.y1, tap.x1);
      }
    }
  }
  return out;
}

template <typename T>
struct WarpGrads {
  Frame<T> src;
  FlowField<T> flow;
};

template <typename T>
WarpGrads<T> backward_warp_backward(const Frame<T>& src, const FlowField<T>& flow, const Frame<T>& grad_out) {
  require_same_extent(src, flow, "backward_warp_backward");
  Tensor<T>::require_same_shape(src, grad_out, "backward_warp_backward");
  const std::size_t c = src.channels(), h = src.height(), w = src.width();
  WarpGrads<T> g{Frame<T>(src.shape()), FlowField<T>(flow.shape())};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto tap = detail::clamped_tap(static_cast<T>(x) + flow.at(0, y, x), static_cast<T>(y) + flow.at(1, y, x), w, h);
      const T fx = tap.fx, fy = tap.fy;
      T gdx = 0, gdy = 0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T go = grad_out.at(ch, y, x);
        if (go == T(0)) continue;
        g.src.at(ch, tap.y0, tap.x0) += go * (1 - fx) * (1 - fy);
        g.src.at(ch, tap.y0, tap.x1) += go * fx * (1 - fy);
        g.src.at(ch, tap.y1, tap.x0) += go * (1 - fx) * fy;
        g.src.at(ch, tap.y1, tap.x1) += go * fx * fy;
        const T v00 = src.at(ch, tap.y0, tap.x0), v01 = src.at(ch, tap.y0, tap.x1);
        const T v10 = src.at(ch, tap.y1, tap.x0), v11 = src.at(ch, tap.y1, tap.x1);
        gdx += go * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
        gdy += go * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
      }
      g.flow.at(0, y, x) = tap.free_x ? gdx : T(0);
      g.flow.at(1, y, x) = tap.free_y ? gdy : T(0);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Flow helpers

/// Horizontal flow sign * d, zero vertical flow.
template <typename T>
FlowField<T> disparity_to_flow(const DisparityMap<T>& d, int sign = 1) {
  require_channels(d, 1, "disparity_to_flow");
  FlowField<T> f = FlowField<T>::raster(2, d.height(), d.width());
  const T s = static_cast<T>(sign);
  for (std::size_t i = 0; i < d.size(); ++i) f[i] = s * d[i];
  return f;
}

/// Gradient w.r.t. the disparity given the gradient w.r.t. the produced flow.
template <typename T>
DisparityMap<T> disparity_to_flow_backward(const FlowField<T>& grad_flow, int sign = 1) {
  DisparityMap<T> g = slice_channels(grad_flow, 0, 1);
  g *= static_cast<T>(sign);
  return g;
}

/// Uniform-motion rescaling of a flow field by a fraction of its interval.
template <typename T>
FlowField<T> scale_flow(const FlowField<T>& f, T t) {
  require_channels(f, 2, "scale_flow");
  if (!(t >= T(0) && t <= T(1))) throw InputError("scale_flow: t must lie in [0, 1]");
  FlowField<T> out = f;
  out *= t;
  return out;
}

template <typename T>
FlowField<T> scale_flow_backward(const FlowField<T>& grad_out, T t) {
  FlowField<T> g = grad_out;
  g *= t;
  return g;
}

// ---------------------------------------------------------------------------
// Forward splatting

template <typename T>
struct WarpOutput {
  Frame<T> image;
  Frame<T> mass;  // 1 channel, accumulated bilinear coverage; <= kSplatEpsilon marks a hole
};

struct Uniform {};

/// Importance exp(-beta * |reference - backward_warp(target, span_flow)|_1):
/// pixels whose motion is photometrically consistent win conflicts.
/// span_flow defaults to the splatting flow when absent.
template <typename T>
struct BrightnessConstancy {
  Frame<T> reference;
  Frame<T> target;
  T beta = T(10);
  std::optional<FlowField<T>> span_flow;
};

/// Importance exp(alpha * d): larger disparity (nearer) pixels win conflicts.
template <typename T>
struct DisparityMagnitude {
  DisparityMap<T> disparity;
  T alpha = T(0.1);
};

template <typename T>
using SplatWeightMode = std::variant<Uniform, BrightnessConstancy<T>, DisparityMagnitude<T>>;

/// Log-importance z for each source pixel; the splat weight is exp(z).
template <typename T>
Tensor<T> splat_log_importance(const SplatWeightMode<T>& mode, const FlowField<T>& flow) {
  require_channels(flow, 2, "splat_log_importance");
  Tensor<T> z = Tensor<T>::raster(1, flow.height(), flow.width());
  if (const auto* b = std::get_if<BrightnessConstancy<T>>(&mode)) {
    if (!(b->beta > T(0))) throw InputError("forward_splat: beta must be positive");
    require_same_extent(b->reference, flow, "forward_splat reference");
    Tensor<T>::require_same_shape(b->reference, b->target, "forward_splat brightness target");
    const Frame<T> warped = backward_warp(b->target, b->span_flow ? *b->span_flow : flow);
    const std::size_t n = z.size();
    for (std::size_t ch = 0; ch < b->reference.channels(); ++ch)
      for (std::size_t i = 0; i < n; ++i) z[i] -= b->beta * std::abs(b->reference[ch * n + i] - warped[ch * n + i]);
  } else if (const auto* d = std::get_if<DisparityMagnitude<T>>(&mode)) {
    if (!(d->alpha >= T(0))) throw InputError("forward_splat: alpha must be nonnegative");
    require_channels(d->disparity, 1, "forward_splat disparity");
    require_same_extent(d->disparity, flow, "forward_splat disparity");
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = d->alpha * d->disparity[i];
  }
  return z;
}

namespace detail {

template <typename T>
struct SplatTap {
  std::ptrdiff_t x0, y0;
  T ax, ay;
};

template <typename T>
SplatTap<T> splat_tap(std::size_t x, std::size_t y, const FlowField<T>& flow) {
  const T qx = static_cast<T>(x) + flow.at(0, y, x);
  const T qy = static_cast<T>(y) + flow.at(1, y, x);
  const T fx = std::floor(qx), fy = std::floor(qy);
  return {static_cast<std::ptrdiff_t>(fx), static_cast<std::ptrdiff_t>(fy), qx - fx, qy - fy};
}

// Visits the in-frame bilinear neighbours of a splat with weight b and the
// partial derivatives of b w.r.t. the landing position.
template <typename T, typename F>
void for_each_neighbour(const SplatTap<T>& s, std::size_t w, std::size_t h, F&& fn) {
  const T bx[2] = {1 - s.ax, s.ax}, by[2] = {1 - s.ay, s.ay};
  const T dbx[2] = {-1, 1}, dby[2] = {-1, 1};
  for (int j = 0; j < 2; ++j) {
    const std::ptrdiff_t ty = s.y0 + j;
    if (ty < 0 || ty >= static_cast<std::ptrdiff_t>(h)) continue;
    for (int i = 0; i < 2; ++i) {
      const std::ptrdiff_t tx = s.x0 + i;
      if (tx < 0 || tx >= static_cast<std::ptrdiff_t>(w)) continue;
      const T b = bx[i] * by[j];
      fn(static_cast<std::size_t>(ty) * w + static_cast<std::size_t>(tx), b, dbx[i] * by[j], bx[i] * dby[j]);
    }
  }
}

// Per-target coverage, maximum contributing log-importance and normaliser.
// Importances are exponentiated relative to the target's maximum, which
// leaves the normalised result unchanged and keeps it finite.
template <typename T>
struct SplatNormaliser {
  std::vector<T> coverage, zmax, total;
};

template <typename T>
SplatNormaliser<T> splat_normaliser(const FlowField<T>& flow, const Tensor<T>& z) {
  const std::size_t h = flow.height(), w = flow.width(), n = h * w;
  SplatNormaliser<T> s{std::vector<T>(n, T(0)), std::vector<T>(n, -std::numeric_limits<T>::infinity()),
                       std::vector<T>(n, T(0))};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T zp = z[y * w + x];
      for_each_neighbour(splat_tap(x, y, flow), w, h, [&](std::size_t t, T b, T, T) {
        if (b <= T(0)) return;
        s.coverage[t] += b;
        s.zmax[t] = std::max(s.zmax[t], zp);
      });
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T zp = z[y * w + x];
      for_each_neighbour(splat_tap(x, y, flow), w, h, [&](std::size_t t, T b, T, T) {
        if (b <= T(0)) return;
        s.total[t] += b * std::exp(zp - s.zmax[t]);
      });
    }
  }
  return s;
}

}  // namespace detail

/// Softmax-style splatting: each source pixel scatters to its four bilinear
/// neighbours with weight b * exp(z); every target receives the weighted
/// average of what landed there, or 0 in a hole.
template <typename T>
WarpOutput<T> forward_splat_weighted(const Frame<T>& src, const FlowField<T>& flow, const Tensor<T>& log_importance) {
  require_channels(flow, 2, "forward_splat flow");
  require_same_extent(src, flow, "forward_splat");
  require_channels(log_importance, 1, "forward_splat importance");
  require_same_extent(src, log_importance, "forward_splat importance");
  const std::size_t c = src.channels(), h = src.height(), w = src.width(), n = h * w;
  const auto norm = detail::splat_normaliser(flow, log_importance);
  WarpOutput<T> out{Frame<T>::raster(c, h, w), Frame<T>::raster(1, h, w)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      const T zp = log_importance[p];
      detail::for_each_neighbour(detail::splat_tap(x, y, flow), w, h, [&](std::size_t t, T b, T, T) {
        if (b <= T(0) || norm.coverage[t] <= static_cast<T>(kSplatEpsilon)) return;
        const T a = b * std::exp(zp - norm.zmax[t]) / norm.total[t];
        for (std::size_t ch = 0; ch < c; ++ch) out.image[ch * n + t] += a * src[ch * n + p];
      });
    }
  }
  std::copy(norm.coverage.begin(), norm.coverage.end(), out.mass.data().begin());
  return out;
}

template <typename T>
WarpOutput<T> forward_splat(const Frame<T>& src, const FlowField<T>& flow, const SplatWeightMode<T>& mode = Uniform{}) {
  return forward_splat_weighted(src, flow, splat_log_importance(mode, flow));
}

template <typename T>
struct SplatGrads {
  Frame<T> src;
  FlowField<T> flow;
  Tensor<T> log_importance;
};

/// Gradients of sum(grad_image * image + grad_mass * mass) for forward_splat_weighted.
template <typename T>
SplatGrads<T> forward_splat_backward(const Frame<T>& src, const FlowField<T>& flow, const Tensor<T>& log_importance,
                                     const Frame<T>& grad_image, const Frame<T>* grad_mass = nullptr) {
  Tensor<T>::require_same_shape(src, grad_image, "forward_splat_backward");
  const std::size_t c = src.channels(), h = src.height(), w = src.width(), n = h * w;
  const auto fwd = forward_splat_weighted(src, flow, log_importance);
  const auto norm = detail::splat_normaliser(flow, log_importance);
  SplatGrads<T> g{Frame<T>(src.shape()), FlowField<T>(flow.shape()), Tensor<T>(log_importance.shape())};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      const T zp = log_importance[p];
      T gz = 0, gfx = 0, gfy = 0;
      detail::for_each_neighbour(detail::splat_tap(x, y, flow), w, h, [&](std::size_t t, T b, T dbdx, T dbdy) {
        // d(loss)/d(b) for this neighbour, through the normalised average and the coverage map.
        T gb = grad_mass ? (*grad_mass)[t] : T(0);
        if (b > T(0) && norm.coverage[t] > static_cast<T>(kSplatEpsilon)) {
          const T e = std::exp(zp - norm.zmax[t]);
          T acc = 0;
          for (std::size_t ch = 0; ch < c; ++ch) {
            const T go = grad_image[ch * n + t];
            acc += go * (src[ch * n + p] - fwd.image[ch * n + t]);
            g.src[ch * n + p] += b * e / norm.total[t] * go;
          }
          const T da = acc / norm.total[t];  // d(loss)/d(b * e)
          gz += da * b * e;
          gb += da * e;
        }
        gfx += gb * dbdx;
        gfy += gb * dbdy;
      });
      g.log_importance[p] = gz;
      g.flow.at(0, y, x) = gfx;
      g.flow.at(1, y, x) = gfy;
    }
  }
  return g;
}

template <typename T>
struct BrightnessGrads {
  Frame<T> reference, target;
  FlowField<T> span_flow;
};

/// Gradient of sum(grad_z * z) for the brightness-constancy log-importance.
template <typename T>
BrightnessGrads<T> brightness_importance_backward(const Frame<T>& reference, const Frame<T>& target,
                                                  const FlowField<T>& span_flow, T beta, const Tensor<T>& grad_z) {
  const Frame<T> warped = backward_warp(target, span_flow);
  const std::size_t n = grad_z.size();
  BrightnessGrads<T> g{Frame<T>(reference.shape()), Frame<T>(target.shape()), FlowField<T>(span_flow.shape())};
  Frame<T> g_warped(warped.shape());
  for (std::size_t ch = 0; ch < reference.channels(); ++ch) {
    for (std::size_t i = 0; i < n; ++i) {
      const T diff = reference[ch * n + i] - warped[ch * n + i];
      const T s = diff > T(0) ? T(1) : diff < T(0) ? T(-1) : T(0);
      g.reference[ch * n + i] = -beta * s * grad_z[i];
      g_warped[ch * n + i] = beta * s * grad_z[i];
    }
  }
  auto wg = backward_warp_backward(target, span_flow, g_warped);
  g.target = std::move(wg.src);
  g.span_flow = std::move(wg.flow);
  return g;
}

// ---------------------------------------------------------------------------
// Composite alignment operators

/// Aligns an HSR endpoint frame to the LSR view at time t along the composite
/// flow f_L + backward_warp(disparity_to_flow(d), f_L).
template <typename T>
FlowField<T> cascaded_flow(const DisparityMap<T>& d_endpoint, const FlowField<T>& f_l) {
  require_channels(d_endpoint, 1, "cascaded_warp disparity");
  require_same_extent(d_endpoint, f_l, "cascaded_warp");
  FlowField<T> comp = backward_warp(disparity_to_flow(d_endpoint), f_l);
  comp += f_l;
  return comp;
}

template <typename T>
Frame<T> cascaded_warp(const Frame<T>& hsr, const DisparityMap<T>& d_endpoint, const FlowField<T>& f_l) {
  require_same_extent(hsr, f_l, "cascaded_warp");
  return backward_warp(hsr, cascaded_flow(d_endpoint, f_l));
}

template <typename T>
struct CascadedGrads {
  Frame<T> hsr;
  DisparityMap<T> disparity;
  FlowField<T> flow;
};

template <typename T>
CascadedGrads<T> cascaded_warp_backward(const Frame<T>& hsr, const DisparityMap<T>& d_endpoint, const FlowField<T>& f_l,
                                        const Frame<T>& grad_out) {
  const FlowField<T> dflow = disparity_to_flow(d_endpoint);
  const FlowField<T> comp = cascaded_flow(d_endpoint, f_l);
  auto outer = backward_warp_backward(hsr, comp, grad_out);
  auto inner = backward_warp_backward(dflow, f_l, outer.flow);
  FlowField<T> g_flow = outer.flow;
  g_flow += inner.flow;
  return {std::move(outer.src), disparity_to_flow_backward(inner.src), std::move(g_flow)};
}

/// Disparity at time t, carried from an endpoint along the LSR-view flow.
template <typename T>
DisparityMap<T> propagate_disparity(const DisparityMap<T>& d_endpoint, const FlowField<T>& f_l) {
  require_channels(d_endpoint, 1, "propagate_disparity");
  return backward_warp(d_endpoint, f_l);
}

template <typename T>
WarpGrads<T> propagate_disparity_backward(const DisparityMap<T>& d_endpoint, const FlowField<T>& f_l,
                                          const DisparityMap<T>& grad_out) {
  return backward_warp_backward(d_endpoint, f_l, grad_out);
}

/// Splats src from the left grid onto the right grid along the disparity,
/// nearer pixels winning conflicts.
template <typename T>
WarpOutput<T> disparity_splat(const Frame<T>& src, const DisparityMap<T>& d, T alpha) {
  require_channels(d, 1, "disparity_splat");
  const FlowField<T> flow = disparity_to_flow(d);
  return forward_splat(src, flow, SplatWeightMode<T>(DisparityMagnitude<T>{d, alpha}));
}

template <typename T>
struct DisparitySplatGrads {
  Frame<T> src;
  DisparityMap<T> disparity;
};

template <typename T>
DisparitySplatGrads<T> disparity_splat_backward(const Frame<T>& src, const DisparityMap<T>& d, T alpha,
                                                const Frame<T>& grad_image, const Frame<T>* grad_mass = nullptr) {
  const FlowField<T> flow = disparity_to_flow(d);
  Tensor<T> z = d;
  z *= alpha;
  auto g = forward_splat_backward(src, flow, z, grad_image, grad_mass);
  DisparityMap<T> gd = disparity_to_flow_backward(g.flow);
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += alpha * g.log_importance[i];
  return {std::move(g.src), std::move(gd)};
}

/// LSR-view flow moved onto the HSR view at time t; holes carry zero flow.
template <typename T>
WarpOutput<T> transfer_flow(const FlowField<T>& f_l, const DisparityMap<T>& d_t, T alpha = T(0.1)) {
  require_channels(f_l, 2, "transfer_flow");
  return disparity_splat(f_l, d_t, alpha);
}

template <typename T>
DisparitySplatGrads<T> transfer_flow_backward(const FlowField<T>& f_l, const DisparityMap<T>& d_t, T alpha,
                                              const FlowField<T>& grad_out) {
  return disparity_splat_backward(f_l, d_t, alpha, grad_out);
}

/// LSR-view appearance at time t splatted onto the HSR view.
template <typename T>
WarpOutput<T> warp_appearance(const Frame<T>& lsr_t, const DisparityMap<T>& d_t, T alpha = T(0.1)) {
  return disparity_splat(lsr_t, d_t, alpha);
}

template <typename T>
DisparitySplatGrads<T> warp_appearance_backward(const Frame<T>& lsr_t, const DisparityMap<T>& d_t, T alpha,
                                                const Frame<T>& grad_out) {
  return disparity_splat_backward(lsr_t, d_t, alpha, grad_out);
}

}  // namespace hstr
