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

// Training and diagnostic losses. Every L1 term is the mean absolute
// difference over pixels and channels.

#include <cmath>

#include "hstr/pipeline/align.hpp"

namespace hstr {

struct LossWeights {
  double lambda_l = 1.0;
  double lambda_r = 1.0;
  double lambda_d = 1.0;
  double lambda_f = 1.0;
  double lambda_s = 0.005;

  void validate() const {
    for (double v : {lambda_l, lambda_r, lambda_d, lambda_f, lambda_s}) {
      if (!std::isfinite(v) || v < 0) throw InputError("loss weights must be finite and nonnegative");
    }
  }
};

struct LossParts {
  double l = 0, r = 0, d = 0, f = 0, s = 0;
};

template <typename T>
double loss_reconstruction(const Frame<T>& pred, const Frame<T>& gt) {
  Tensor<T>::require_same_shape(pred, gt, "loss_reconstruction");
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(static_cast<double>(pred[i]) - gt[i]);
  return acc / static_cast<double>(pred.size());
}

/// Photometric consistency of each endpoint disparity: left GT against the
/// HSR frame sampled along d.
template <typename T>
double loss_warp_disp(const Frame<T>& l0, const Frame<T>& lT, const Frame<T>& r0, const Frame<T>& rT,
                      const DisparityMap<T>& d0, const DisparityMap<T>& dT) {
  return loss_reconstruction(l0, backward_warp(r0, disparity_to_flow(d0))) +
         loss_reconstruction(lT, backward_warp(rT, disparity_to_flow(dT)));
}

template <typename T>
double loss_warp_flow(const AlignmentBundle<T>& b, const Frame<T>& gt_l) {
  return loss_reconstruction(gt_l, b.l1) + loss_reconstruction(gt_l, b.l2);
}

/// Mean forward-difference magnitude |dx| + |dy| of one map; differences
/// past the last row and column are zero.
template <typename T>
double total_variation(const DisparityMap<T>& d) {
  require_channels(d, 1, "total_variation");
  const std::size_t h = d.height(), w = d.width();
  double acc = 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (x + 1 < w) acc += std::abs(static_cast<double>(d.at(0, y, x + 1)) - d.at(0, y, x));
      if (y + 1 < h) acc += std::abs(static_cast<double>(d.at(0, y + 1, x)) - d.at(0, y, x));
    }
  return acc / static_cast<double>(h * w);
}

template <typename T>
double loss_smooth(const DisparityMap<T>& d0, const DisparityMap<T>& dT) {
  return total_variation(d0) + total_variation(dT);
}

inline double loss_total(const LossParts& p, const LossWeights& w) {
  w.validate();
  return w.lambda_l * p.l + w.lambda_r * p.r + w.lambda_d * p.d + w.lambda_f * p.f + w.lambda_s * p.s;
}

}  // namespace hstr
