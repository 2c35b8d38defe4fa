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

// Separable resampling with half-pixel centers (align-corners false):
// output sample o maps to source coordinate (o + 0.5) * in / out - 0.5.
// Taps falling outside the source are clamped to the border sample.

#include <cmath>
#include <cstddef>
#include <vector>

#include "hstr/core/tensor.hpp"

namespace hstr {

namespace detail {

/// Per-output-sample tap lists in CSR form.
struct AxisTaps {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<std::size_t> offset;  // out + 1 entries
  std::vector<std::size_t> index;
  std::vector<double> weight;

  void push(std::ptrdiff_t i, double w) {
    const auto hi = static_cast<std::ptrdiff_t>(in) - 1;
    index.push_back(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, hi)));
    weight.push_back(w);
  }
};

inline double source_coord(std::size_t o, std::size_t in, std::size_t out) {
  return (static_cast<double>(o) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
}

inline AxisTaps bilinear_taps(std::size_t in, std::size_t out) {
  AxisTaps taps{in, out, {0}, {}, {}};
  for (std::size_t o = 0; o < out; ++o) {
    const double s = source_coord(o, in, out);
    const double f = std::floor(s);
    const double frac = s - f;
    const auto i0 = static_cast<std::ptrdiff_t>(f);
    taps.push(i0, 1.0 - frac);
    taps.push(i0 + 1, frac);
    taps.offset.push_back(taps.index.size());
  }
  return taps;
}

/// Keys cubic convolution kernel; a = -0.5 is Catmull-Rom.
inline double cubic_kernel(double x, double a = -0.5) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

/// When shrinking, the kernel is stretched by the reduction factor and the
/// taps renormalized, so downscaling low-passes before decimation.
inline AxisTaps bicubic_taps(std::size_t in, std::size_t out) {
  AxisTaps taps{in, out, {0}, {}, {}};
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double stretch = std::max(1.0, scale);
  const double support = 2.0 * stretch;
  for (std::size_t o = 0; o < out; ++o) {
    const double s = source_coord(o, in, out);
    const auto first = static_cast<std::ptrdiff_t>(std::floor(s - support)) + 1;
    const auto last = static_cast<std::ptrdiff_t>(std::ceil(s + support)) - 1;
    const std::size_t begin = taps.index.size();
    double total = 0.0;
    for (std::ptrdiff_t i = first; i <= last; ++i) {
      const double w = cubic_kernel((s - static_cast<double>(i)) / stretch);
      if (w == 0.0) continue;
      taps.push(i, w);
      total += w;
    }
    for (std::size_t k = begin; k < taps.index.size(); ++k) taps.weight[k] /= total;
    taps.offset.push_back(taps.index.size());
  }
  return taps;
}

template <typename T>
Tensor<T> resample(const Tensor<T>& src, const AxisTaps& ty, const AxisTaps& tx) {
  const std::size_t c = src.channels(), h = src.height();
  Tensor<T> tmp = Tensor<T>::raster(c, h, tx.out);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      const T* row = &src.at(ch, y, 0);
      T* dst = &tmp.at(ch, y, 0);
      for (std::size_t o = 0; o < tx.out; ++o) {
        T acc = 0;
        for (std::size_t k = tx.offset[o]; k < tx.offset[o + 1]; ++k) {
          acc += static_cast<T>(tx.weight[k]) * row[tx.index[k]];
        }
        dst[o] = acc;
      }
    }
  }
  Tensor<T> out = Tensor<T>::raster(c, ty.out, tx.out);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t o = 0; o < ty.out; ++o) {
      T* dst = &out.at(ch, o, 0);
      for (std::size_t k = ty.offset[o]; k < ty.offset[o + 1]; ++k) {
        const T wk = static_cast<T>(ty.weight[k]);
        const T* row = &tmp.at(ch, ty.index[k], 0);
        for (std::size_t x = 0; x < tx.out; ++x) dst[x] += wk * row[x];
      }
    }
  }
  return out;
}

/// Transpose of resample: maps a gradient at the output grid back to the source grid.
template <typename T>
Tensor<T> resample_adjoint(const Tensor<T>& grad, const AxisTaps& ty, const AxisTaps& tx) {
  const std::size_t c = grad.channels();
  Tensor<T> tmp = Tensor<T>::raster(c, ty.in, tx.out);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t o = 0; o < ty.out; ++o) {
      const T* g = &grad.at(ch, o, 0);
      for (std::size_t k = ty.offset[o]; k < ty.offset[o + 1]; ++k) {
        const T wk = static_cast<T>(ty.weight[k]);
        T* row = &tmp.at(ch, ty.index[k], 0);
        for (std::size_t x = 0; x < tx.out; ++x) row[x] += wk * g[x];
      }
    }
  }
  Tensor<T> out = Tensor<T>::raster(c, ty.in, tx.in);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ty.in; ++y) {
      const T* g = &tmp.at(ch, y, 0);
      T* row = &out.at(ch, y, 0);
      for (std::size_t o = 0; o < tx.out; ++o) {
        for (std::size_t k = tx.offset[o]; k < tx.offset[o + 1]; ++k) {
          row[tx.index[k]] += static_cast<T>(tx.weight[k]) * g[o];
        }
      }
    }
  }
  return out;
}

inline void require_target(std::size_t out_h, std::size_t out_w, const char* what) {
  if (out_h == 0 || out_w == 0) throw ShapeError(std::string(what) + ": target size must be positive");
}

}  // namespace detail

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& src, std::size_t out_h, std::size_t out_w) {
  require_raster(src, "resize_bilinear");
  detail::require_target(out_h, out_w, "resize_bilinear");
  if (out_h == src.height() && out_w == src.width()) return src;
  return detail::resample(src, detail::bilinear_taps(src.height(), out_h), detail::bilinear_taps(src.width(), out_w));
}

/// Gradient of resize_bilinear with respect to its source.
template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_out, std::size_t in_h, std::size_t in_w) {
  require_raster(grad_out, "resize_bilinear_backward");
  if (grad_out.height() == in_h && grad_out.width() == in_w) return grad_out;
  return detail::resample_adjoint(grad_out, detail::bilinear_taps(in_h, grad_out.height()),
                                  detail::bilinear_taps(in_w, grad_out.width()));
}

/// Catmull-Rom bicubic resize. Set clamp_output for image payloads so
/// overshoot at edges stays inside [0, 1].
template <typename T>
Tensor<T> resize_bicubic(const Tensor<T>& src, std::size_t out_h, std::size_t out_w, bool clamp_output = true) {
  require_raster(src, "resize_bicubic");
  detail::require_target(out_h, out_w, "resize_bicubic");
  if (out_h == src.height() && out_w == src.width()) return src;
  auto out = detail::resample(src, detail::bicubic_taps(src.height(), out_h), detail::bicubic_taps(src.width(), out_w));
  return clamp_output ? clamp01(std::move(out)) : out;
}

}  // namespace hstr
