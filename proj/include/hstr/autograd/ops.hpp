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
#include <vector>

#include "hstr/autograd/var.hpp"
#include "hstr/core/activation.hpp"
#include "hstr/core/conv.hpp"
#include "hstr/core/resize.hpp"
#include "hstr/warp/warp.hpp"

namespace hstr::ag {

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, std::size_t stride = 1) {
  return Var<T>::make(hstr::conv2d(x.value(), w.value(), b.value(), stride), {x, w, b}, [stride](Node<T>& n) {
    auto& in = n.inputs;
    auto g = conv2d_backward(in[0]->value, in[1]->value, in[2]->value, stride, n.grad, in[0]->requires_grad);
    in[0]->accumulate(std::move(g.input));
    in[1]->accumulate(std::move(g.weight));
    in[2]->accumulate(std::move(g.bias));
  });
}

template <typename T>
Var<T> prelu(const Var<T>& x, const Var<T>& slope) {
  return Var<T>::make(hstr::prelu(x.value(), slope.value()), {x, slope}, [](Node<T>& n) {
    auto g = prelu_backward(n.inputs[0]->value, n.inputs[1]->value, n.grad);
    n.inputs[0]->accumulate(std::move(g.input));
    n.inputs[1]->accumulate(std::move(g.slope));
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  Tensor<T> v = a.value();
  v += b.value();
  return Var<T>::make(std::move(v), {a, b}, [](Node<T>& n) {
    n.inputs[0]->accumulate(n.grad);
    n.inputs[1]->accumulate(n.grad);
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> v = a.value();
  v *= s;
  return Var<T>::make(std::move(v), {a}, [s](Node<T>& n) {
    Tensor<T> g = n.grad;
    g *= s;
    n.inputs[0]->accumulate(std::move(g));
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  std::vector<const Tensor<T>*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p.value());
  Tensor<T> v = concat_channels<T>(std::span<const Tensor<T>* const>(ptrs));
  return Var<T>::make(std::move(v), parts, [](Node<T>& n) {
    std::size_t c0 = 0;
    for (auto& in : n.inputs) {
      const std::size_t c = in->value.channels();
      if (in->requires_grad) in->accumulate(slice_channels(n.grad, c0, c));
      c0 += c;
    }
  });
}

template <typename T>
Var<T> slice(const Var<T>& x, std::size_t first, std::size_t count) {
  return Var<T>::make(slice_channels(x.value(), first, count), {x}, [first](Node<T>& n) {
    const auto& src = n.inputs[0]->value;
    Tensor<T> g(src.shape());
    std::copy(n.grad.data().begin(), n.grad.data().end(), g.data().begin() + first * src.plane_size());
    n.inputs[0]->accumulate(std::move(g));
  });
}

template <typename T>
Var<T> resize_bilinear(const Var<T>& x, std::size_t h, std::size_t w) {
  return Var<T>::make(hstr::resize_bilinear(x.value(), h, w), {x}, [](Node<T>& n) {
    const auto& src = n.inputs[0]->value;
    n.inputs[0]->accumulate(resize_bilinear_backward(n.grad, src.height(), src.width()));
  });
}

namespace detail {

inline std::size_t reflect_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace detail

/// Extends the bottom and right edges by mirror reflection to (h, w).
template <typename T>
Var<T> pad_reflect(const Var<T>& x, std::size_t h, std::size_t w) {
  const auto& src = x.value();
  if (h == src.height() && w == src.width()) return x;
  Tensor<T> v = Tensor<T>::raster(src.channels(), h, w);
  for (std::size_t c = 0; c < src.channels(); ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx)
        v.at(c, y, xx) = src.at(c, detail::reflect_index(y, src.height()), detail::reflect_index(xx, src.width()));
  return Var<T>::make(std::move(v), {x}, [](Node<T>& n) {
    const auto& s = n.inputs[0]->value;
    Tensor<T> g(s.shape());
    for (std::size_t c = 0; c < n.grad.channels(); ++c)
      for (std::size_t y = 0; y < n.grad.height(); ++y)
        for (std::size_t xx = 0; xx < n.grad.width(); ++xx)
          g.at(c, detail::reflect_index(y, s.height()), detail::reflect_index(xx, s.width())) += n.grad.at(c, y, xx);
    n.inputs[0]->accumulate(std::move(g));
  });
}

/// Keeps the top-left (h, w) window.
template <typename T>
Var<T> crop(const Var<T>& x, std::size_t h, std::size_t w) {
  const auto& src = x.value();
  if (h == src.height() && w == src.width()) return x;
  Tensor<T> v = Tensor<T>::raster(src.channels(), h, w);
  for (std::size_t c = 0; c < src.channels(); ++c)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(&src.at(c, y, 0), w, &v.at(c, y, 0));
  return Var<T>::make(std::move(v), {x}, [](Node<T>& n) {
    Tensor<T> g(n.inputs[0]->value.shape());
    for (std::size_t c = 0; c < n.grad.channels(); ++c)
      for (std::size_t y = 0; y < n.grad.height(); ++y)
        std::copy_n(&n.grad.at(c, y, 0), n.grad.width(), &g.at(c, y, 0));
    n.inputs[0]->accumulate(std::move(g));
  });
}

template <typename T>
Var<T> backward_warp(const Var<T>& src, const Var<T>& flow) {
  return Var<T>::make(hstr::backward_warp(src.value(), flow.value()), {src, flow}, [](Node<T>& n) {
    auto g = backward_warp_backward(n.inputs[0]->value, n.inputs[1]->value, n.grad);
    n.inputs[0]->accumulate(std::move(g.src));
    n.inputs[1]->accumulate(std::move(g.flow));
  });
}

/// Splatted image only; the coverage map is not differentiated here.
template <typename T>
Var<T> forward_splat(const Var<T>& src, const Var<T>& flow, const Var<T>& log_importance) {
  auto out = forward_splat_weighted(src.value(), flow.value(), log_importance.value());
  return Var<T>::make(std::move(out.image), {src, flow, log_importance}, [](Node<T>& n) {
    auto g = forward_splat_backward(n.inputs[0]->value, n.inputs[1]->value, n.inputs[2]->value, n.grad);
    n.inputs[0]->accumulate(std::move(g.src));
    n.inputs[1]->accumulate(std::move(g.flow));
    n.inputs[2]->accumulate(std::move(g.log_importance));
  });
}

/// mean(|a - b|) over every element, as a one-element tensor.
template <typename T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b) {
  Tensor<T>::require_same_shape(a.value(), b.value(), "l1_mean");
  const std::size_t n = a.value().size();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(a.value()[i] - b.value()[i]);
  return Var<T>::make(Tensor<T>({1}, acc / static_cast<T>(n)), {a, b}, [](Node<T>& node) {
    const auto& av = node.inputs[0]->value;
    const auto& bv = node.inputs[1]->value;
    const T scale = node.grad[0] / static_cast<T>(av.size());
    Tensor<T> ga(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) {
      const T d = av[i] - bv[i];
      ga[i] = d > T(0) ? scale : d < T(0) ? -scale : T(0);
    }
    Tensor<T> gb = ga;
    gb *= T(-1);
    node.inputs[0]->accumulate(std::move(ga));
    node.inputs[1]->accumulate(std::move(gb));
  });
}

/// sum(weights * x) as a one-element tensor; used to project outputs for gradient checks.
template <typename T>
Var<T> dot(const Var<T>& x, const Tensor<T>& weights) {
  Tensor<T>::require_same_shape(x.value(), weights, "dot");
  T acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * x.value()[i];
  return Var<T>::make(Tensor<T>({1}, acc), {x}, [weights](Node<T>& n) {
    Tensor<T> g = weights;
    g *= n.grad[0];
    n.inputs[0]->accumulate(std::move(g));
  });
}

}  // namespace hstr::ag
