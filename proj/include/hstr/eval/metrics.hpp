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

// Image and disparity quality metrics. Accumulation is in double regardless
// of the sample type.

#include <cmath>
#include <limits>
#include <vector>

#include "hstr/core/tensor.hpp"

namespace hstr {

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T>::require_same_shape(a, b, "mse");
  if (a.empty()) throw InputError("mse: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// 10 log10(peak^2 / MSE); +inf for identical inputs.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0) {
  const double e = mse(a, b);
  if (e == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01, k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_window(std::size_t n, double sigma) {
  std::vector<double> g(n);
  const double c = (static_cast<double>(n) - 1) / 2;
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) - c;
    sum += g[i] = std::exp(-x * x / (2 * sigma * sigma));
  }
  for (auto& v : g) v /= sum;
  return g;
}

}  // namespace detail

/// Mean SSIM over every valid window position, per channel, then averaged
/// over channels. Images smaller than the window use a window cropped to
/// the image and renormalised.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimParams& p = {}) {
  Tensor<T>::require_same_shape(a, b, "ssim");
  require_raster(a, "ssim");
  const std::size_t h = a.height(), w = a.width();
  const std::size_t wy = std::min(p.window, h), wx = std::min(p.window, w);
  auto gy = detail::gaussian_window(wy, p.sigma), gx = detail::gaussian_window(wx, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double total = 0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    double acc = 0;
    std::size_t count = 0;
    for (std::size_t y0 = 0; y0 + wy <= h; ++y0) {
      for (std::size_t x0 = 0; x0 + wx <= w; ++x0) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t j = 0; j < wy; ++j)
          for (std::size_t i = 0; i < wx; ++i) {
            const double k = gy[j] * gx[i];
            const double va = a.at(c, y0 + j, x0 + i), vb = b.at(c, y0 + j, x0 + i);
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
    total += acc / static_cast<double>(count);
  }
  return total / static_cast<double>(a.channels());
}

/// Mean over pixels of |d_est - d_gt| / |d_gt + xi|.
template <typename T>
double nepe(const DisparityMap<T>& d_est, const DisparityMap<T>& d_gt, double xi = 1e-3) {
  Tensor<T>::require_same_shape(d_est, d_gt, "nepe");
  if (!(xi > 0)) throw InputError("nepe: xi must be positive");
  if (d_est.empty()) throw InputError("nepe: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < d_est.size(); ++i) {
    const double g = d_gt[i];
    acc += std::abs(static_cast<double>(d_est[i]) - g) / std::abs(g + xi);
  }
  return acc / static_cast<double>(d_est.size());
}

}  // namespace hstr
