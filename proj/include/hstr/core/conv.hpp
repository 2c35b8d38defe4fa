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

// 2-D cross-correlation with zero padding of k/2 on every side.
// Weights are [out_channels, in_channels, k, k]; bias is [out_channels].
// Stride 1 keeps the spatial size, stride 2 halves it (rounding up).
//
// The inner product runs through Eigen's GEMM on an im2col buffer that is
// filled in bounded row bands, so memory stays flat for large frames.

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>

#include "hstr/core/tensor.hpp"

namespace hstr {

struct ConvGeometry {
  std::size_t in_channels = 0, out_channels = 0, kernel = 0, stride = 1;
  std::size_t in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  std::size_t pad() const { return kernel / 2; }
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride) {
  require_raster(input, "conv2d");
  if (weight.rank() != 4 || weight.shape()[2] != weight.shape()[3] || weight.shape()[2] % 2 == 0) {
    throw ShapeError("conv2d: weight must be [out, in, k, k] with odd k, got " + weight.shape_string());
  }
  if (weight.shape()[1] != input.channels()) {
    throw ShapeError("conv2d: weight expects " + std::to_string(weight.shape()[1]) + " input channels, got " +
                     std::to_string(input.channels()));
  }
  if (bias.rank() != 1 || bias.shape()[0] != weight.shape()[0]) {
    throw ShapeError("conv2d: bias shape " + bias.shape_string() + " does not match weight " +
                     weight.shape_string());
  }
  if (stride != 1 && stride != 2) throw InputError("conv2d: stride must be 1 or 2");
  ConvGeometry g;
  g.in_channels = input.channels();
  g.out_channels = weight.shape()[0];
  g.kernel = weight.shape()[2];
  g.stride = stride;
  g.in_h = input.height();
  g.in_w = input.width();
  g.out_h = (g.in_h + 2 * g.pad() - g.kernel) / stride + 1;
  g.out_w = (g.in_w + 2 * g.pad() - g.kernel) / stride + 1;
  return g;
}

namespace detail {

constexpr std::size_t kIm2colBudget = std::size_t{1} << 22;

inline std::size_t band_rows(const ConvGeometry& g) {
  const std::size_t per_row = g.in_channels * g.kernel * g.kernel * g.out_w;
  return std::clamp<std::size_t>(kIm2colBudget / std::max<std::size_t>(per_row, 1), 1, g.out_h);
}

template <typename T>
void im2col(const Tensor<T>& input, const ConvGeometry& g, std::size_t row0, std::size_t rows, T* cols) {
  const std::size_t k = g.kernel, pad = g.pad();
  const std::size_t n = rows * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* dst = cols + ((c * k + ky) * k + kx) * n;
        for (std::size_t oy = 0; oy < rows; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>((row0 + oy) * g.stride + ky) - static_cast<std::ptrdiff_t>(pad);
          T* line = dst + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill_n(line, g.out_w, T(0));
            continue;
          }
          // Valid outputs satisfy 0 <= ox*stride + kx - pad < in_w.
          const std::size_t lo = kx >= pad ? 0 : (pad - kx + g.stride - 1) / g.stride;
          const std::size_t hi =
              g.in_w + pad > kx ? std::min(g.out_w, (g.in_w + pad - kx + g.stride - 1) / g.stride) : 0;
          const T* src = &input.at(c, static_cast<std::size_t>(iy), 0);
          std::fill_n(line, std::min(lo, g.out_w), T(0));
          if (g.stride == 1) {
            for (std::size_t ox = lo; ox < hi; ++ox) line[ox] = src[ox + kx - pad];
          } else {
            for (std::size_t ox = lo; ox < hi; ++ox) line[ox] = src[ox * g.stride + kx - pad];
          }
          if (hi < g.out_w) std::fill_n(line + std::max(hi, lo), g.out_w - std::max(hi, lo), T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, std::size_t row0, std::size_t rows, Tensor<T>& grad_input) {
  const std::size_t k = g.kernel, pad = g.pad();
  const std::size_t n = rows * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* src = cols + ((c * k + ky) * k + kx) * n;
        for (std::size_t oy = 0; oy < rows; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>((row0 + oy) * g.stride + ky) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          T* dst = &grad_input.at(c, static_cast<std::size_t>(iy), 0);
          const T* line = src + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ix] += line[ox];
          }
        }
      }
    }
  }
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

}  // namespace detail

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t stride = 1) {
  const ConvGeometry g = conv_geometry(input, weight, bias, stride);
  const auto ikk = static_cast<Eigen::Index>(g.in_channels * g.kernel * g.kernel);
  const auto oc = static_cast<Eigen::Index>(g.out_channels);
  Tensor<T> out = Tensor<T>::raster(g.out_channels, g.out_h, g.out_w);
  detail::ConstMatrixMap<T> w(weight.data().data(), oc, ikk);
  const std::size_t band = detail::band_rows(g);
  std::vector<T> cols(g.in_channels * g.kernel * g.kernel * band * g.out_w);
  detail::RowMatrix<T> block;
  for (std::size_t row0 = 0; row0 < g.out_h; row0 += band) {
    const std::size_t rows = std::min(band, g.out_h - row0);
    const auto n = static_cast<Eigen::Index>(rows * g.out_w);
    detail::im2col(input, g, row0, rows, cols.data());
    detail::ConstMatrixMap<T> c(cols.data(), ikk, n);
    block.noalias() = w * c;
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      T* dst = &out.at(o, row0, 0);
      const T b = bias[o];
      for (Eigen::Index j = 0; j < n; ++j) dst[j] = block(static_cast<Eigen::Index>(o), j) + b;
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input, weight, bias;
};

/// Gradients of sum(grad_out * conv2d(input, weight, bias)).
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                             std::size_t stride, const Tensor<T>& grad_out, bool need_input_grad = true) {
  const ConvGeometry g = conv_geometry(input, weight, bias, stride);
  if (grad_out.rank() != 3 || grad_out.channels() != g.out_channels || grad_out.height() != g.out_h ||
      grad_out.width() != g.out_w) {
    throw ShapeError("conv2d_backward: upstream gradient shape " + grad_out.shape_string());
  }
  const auto ikk = static_cast<Eigen::Index>(g.in_channels * g.kernel * g.kernel);
  const auto oc = static_cast<Eigen::Index>(g.out_channels);
  ConvGrads<T> grads{Tensor<T>::raster(g.in_channels, g.in_h, g.in_w), Tensor<T>(weight.shape()),
                     Tensor<T>(bias.shape())};
  detail::ConstMatrixMap<T> w(weight.data().data(), oc, ikk);
  detail::MatrixMap<T> gw(grads.weight.data().data(), oc, ikk);
  const std::size_t band = detail::band_rows(g);
  std::vector<T> cols(g.in_channels * g.kernel * g.kernel * band * g.out_w);
  detail::RowMatrix<T> gblock, gcols;
  for (std::size_t row0 = 0; row0 < g.out_h; row0 += band) {
    const std::size_t rows = std::min(band, g.out_h - row0);
    const auto n = static_cast<Eigen::Index>(rows * g.out_w);
    gblock.resize(oc, n);
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      const T* src = &grad_out.at(o, row0, 0);
      T sum = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        gblock(static_cast<Eigen::Index>(o), j) = src[j];
        sum += src[j];
      }
      grads.bias[o] += sum;
    }
    detail::im2col(input, g, row0, rows, cols.data());
    detail::ConstMatrixMap<T> c(cols.data(), ikk, n);
    gw.noalias() += gblock * c.transpose();
    if (need_input_grad) {
      gcols.noalias() = w.transpose() * gblock;
      detail::col2im(gcols.data(), g, row0, rows, grads.input);
    }
  }
  return grads;
}

}  // namespace hstr
