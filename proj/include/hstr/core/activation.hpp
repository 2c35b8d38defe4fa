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

#include <cmath>
#include <cstddef>

#include "hstr/core/tensor.hpp"

namespace hstr {

/// Parametric ReLU with one slope per channel (slope shape [channels]).
template <typename T>
Tensor<T> prelu(const Tensor<T>& input, const Tensor<T>& slope) {
  require_raster(input, "prelu");
  if (slope.size() != input.channels()) throw ShapeError("prelu: expected one slope per channel");
  Tensor<T> out = input;
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const T a = slope[c];
    for (auto& v : out.plane(c)) v = v >= T(0) ? v : a * v;
  }
  return out;
}

template <typename T>
struct PreluGrads {
  Tensor<T> input, slope;
};

template <typename T>
PreluGrads<T> prelu_backward(const Tensor<T>& input, const Tensor<T>& slope, const Tensor<T>& grad_out) {
  Tensor<T>::require_same_shape(input, grad_out, "prelu_backward");
  PreluGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(slope.shape())};
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const T a = slope[c];
    auto x = input.plane(c);
    auto go = grad_out.plane(c);
    auto gi = g.input.plane(c);
    T ga = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= T(0)) {
        gi[i] = go[i];
      } else {
        gi[i] = a * go[i];
        ga += x[i] * go[i];
      }
    }
    g.slope[c] = ga;
  }
  return g;
}

/// Softmax across channels [first, first + count) at every pixel. Returns
/// a raster holding only those channels.
template <typename T>
Tensor<T> channel_softmax(const Tensor<T>& logits, std::size_t first, std::size_t count) {
  require_raster(logits, "channel_softmax");
  if (count == 0 || first + count > logits.channels()) throw ShapeError("channel_softmax: channel range");
  const std::size_t n = logits.plane_size();
  Tensor<T> out = Tensor<T>::raster(count, logits.height(), logits.width());
  for (std::size_t p = 0; p < n; ++p) {
    T m = logits[first * n + p];
    for (std::size_t k = 0; k < count; ++k) {
      const T v = logits[(first + k) * n + p];
      if (!std::isfinite(v)) throw NumericError("channel_softmax: non-finite logit");
      m = std::max(m, v);
    }
    T total = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const T e = std::exp(logits[(first + k) * n + p] - m);
      out[k * n + p] = e;
      total += e;
    }
    for (std::size_t k = 0; k < count; ++k) out[k * n + p] /= total;
  }
  return out;
}

template <typename T>
Tensor<T> channel_softmax(const Tensor<T>& logits) {
  return channel_softmax(logits, 0, logits.channels());
}

/// Gradient w.r.t. the logits given the softmax output and its upstream gradient.
template <typename T>
Tensor<T> channel_softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_out) {
  Tensor<T>::require_same_shape(probs, grad_out, "channel_softmax_backward");
  const std::size_t n = probs.plane_size(), k = probs.channels();
  Tensor<T> g(probs.shape());
  for (std::size_t p = 0; p < n; ++p) {
    T dot = 0;
    for (std::size_t c = 0; c < k; ++c) dot += probs[c * n + p] * grad_out[c * n + p];
    for (std::size_t c = 0; c < k; ++c) g[c * n + p] = probs[c * n + p] * (grad_out[c * n + p] - dot);
  }
  return g;
}

}  // namespace hstr
