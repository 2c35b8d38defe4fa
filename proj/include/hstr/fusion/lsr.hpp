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

// Adaptive weighting fusion for the LSR-HFR view.
//
// A U-net maps the 15-channel guidance stack (upsampled LSR frame, the two
// cascaded-warp candidates, both propagated disparities, both LSR flows) to
// 53 feature channels Fm:
//   channels  0..24  per-pixel 5x5 filter K1 for the first candidate,
//   channels 25..49  filter K2 for the second candidate,
//   channels 50..52  logits of the three blending masks.
// Tap (i, j) of a filter lives in channel 5i + j and weighs the sample at
// column offset i - 2 and row offset j - 2. The same filter and masks are
// applied to every colour channel.

#include <array>
#include <string>

#include "hstr/fusion/params.hpp"

namespace hstr {

inline constexpr std::size_t kFusionFeatureChannels = 53;
inline constexpr std::size_t kFilterTaps = 25;
inline constexpr std::size_t kFilter1Channel = 0;
inline constexpr std::size_t kFilter2Channel = 25;
inline constexpr std::size_t kMaskChannel = 50;
inline constexpr std::size_t kLsrGuidanceChannels = 15;

/// Per-pixel 5x5 filtering with replicate padding. `filters` holds 25 taps
/// starting at channel `first`.
template <typename T>
Frame<T> apply_dynamic_filter(const Frame<T>& img, const Tensor<T>& filters, std::size_t first = 0) {
  require_same_extent(img, filters, "apply_dynamic_filter");
  if (first + kFilterTaps > filters.channels()) throw ShapeError("apply_dynamic_filter: filter channel range");
  const std::size_t c = img.channels(), h = img.height(), w = img.width(), n = h * w;
  const auto hi_x = static_cast<std::ptrdiff_t>(w) - 1, hi_y = static_cast<std::ptrdiff_t>(h) - 1;
  Frame<T> out = Frame<T>::raster(c, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      for (std::size_t i = 0; i < 5; ++i) {
        const auto sx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(x + i) - 2, 0, hi_x));
        for (std::size_t j = 0; j < 5; ++j) {
          const auto sy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y + j) - 2, 0, hi_y));
          const T k = filters[(first + 5 * i + j) * n + p];
          for (std::size_t ch = 0; ch < c; ++ch) out[ch * n + p] += k * img[ch * n + sy * w + sx];
        }
      }
    }
  }
  return out;
}

template <typename T>
struct DynamicFilterGrads {
  Frame<T> img;
  Tensor<T> filters;  // 25 channels
};

template <typename T>
DynamicFilterGrads<T> apply_dynamic_filter_backward(const Frame<T>& img, const Tensor<T>& filters, std::size_t first,
                                                    const Frame<T>& grad_out) {
  const std::size_t c = img.channels(), h = img.height(), w = img.width(), n = h * w;
  const auto hi_x = static_cast<std::ptrdiff_t>(w) - 1, hi_y = static_cast<std::ptrdiff_t>(h) - 1;
  DynamicFilterGrads<T> g{Frame<T>(img.shape()), Tensor<T>::raster(kFilterTaps, h, w)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      for (std::size_t i = 0; i < 5; ++i) {
        const auto sx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(x + i) - 2, 0, hi_x));
        for (std::size_t j = 0; j < 5; ++j) {
          const auto sy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y + j) - 2, 0, hi_y));
          const std::size_t q = sy * w + sx;
          const T k = filters[(first + 5 * i + j) * n + p];
          T gk = 0;
          for (std::size_t ch = 0; ch < c; ++ch) {
            const T go = grad_out[ch * n + p];
            gk += go * img[ch * n + q];
            g.img[ch * n + q] += k * go;
          }
          g.filters[(5 * i + j) * n + p] = gk;
        }
      }
    }
  }
  return g;
}

/// M = softmax(mask_logits); out = M0 * a + M1 * b + M2 * c.
template <typename T>
Frame<T> blend(const Frame<T>& a, const Frame<T>& b, const Frame<T>& c, const Tensor<T>& mask_logits,
               std::size_t first = 0) {
  Tensor<T>::require_same_shape(a, b, "blend");
  Tensor<T>::require_same_shape(a, c, "blend");
  require_same_extent(a, mask_logits, "blend");
  const Tensor<T> m = channel_softmax(mask_logits, first, 3);
  const std::size_t n = a.plane_size();
  Frame<T> out(a.shape());
  for (std::size_t ch = 0; ch < a.channels(); ++ch)
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t i = ch * n + p;
      out[i] = m[p] * a[i] + m[n + p] * b[i] + m[2 * n + p] * c[i];
    }
  return out;
}

template <typename T>
struct BlendGrads {
  Frame<T> a, b, c;
  Tensor<T> logits;  // 3 channels
};

template <typename T>
BlendGrads<T> blend_backward(const Frame<T>& a, const Frame<T>& b, const Frame<T>& c, const Tensor<T>& mask_logits,
                             std::size_t first, const Frame<T>& grad_out) {
  const Tensor<T> m = channel_softmax(mask_logits, first, 3);
  const std::size_t n = a.plane_size();
  BlendGrads<T> g{Frame<T>(a.shape()), Frame<T>(b.shape()), Frame<T>(c.shape()), Tensor<T>(m.shape())};
  Tensor<T> gm(m.shape());
  for (std::size_t ch = 0; ch < a.channels(); ++ch)
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t i = ch * n + p;
      const T go = grad_out[i];
      g.a[i] = m[p] * go;
      g.b[i] = m[n + p] * go;
      g.c[i] = m[2 * n + p] * go;
      gm[p] += a[i] * go;
      gm[n + p] += b[i] * go;
      gm[2 * n + p] += c[i] * go;
    }
  g.logits = channel_softmax_backward(m, gm);
  return g;
}

namespace ag {

template <typename T>
Var<T> dynamic_filter(const Var<T>& img, const Var<T>& features, std::size_t first) {
  return Var<T>::make(apply_dynamic_filter(img.value(), features.value(), first), {img, features},
                      [first](Node<T>& n) {
                        const auto& fm = n.inputs[1]->value;
                        auto g = apply_dynamic_filter_backward(n.inputs[0]->value, fm, first, n.grad);
                        n.inputs[0]->accumulate(std::move(g.img));
                        if (n.inputs[1]->requires_grad) {
                          Tensor<T> full(fm.shape());
                          std::copy(g.filters.data().begin(), g.filters.data().end(),
                                    full.data().begin() + first * fm.plane_size());
                          n.inputs[1]->accumulate(std::move(full));
                        }
                      });
}

template <typename T>
Var<T> blend(const Var<T>& a, const Var<T>& b, const Var<T>& c, const Var<T>& features, std::size_t first) {
  return Var<T>::make(hstr::blend(a.value(), b.value(), c.value(), features.value(), first), {a, b, c, features},
                      [first](Node<T>& n) {
                        const auto& fm = n.inputs[3]->value;
                        auto g = blend_backward(n.inputs[0]->value, n.inputs[1]->value, n.inputs[2]->value, fm, first,
                                                n.grad);
                        n.inputs[0]->accumulate(std::move(g.a));
                        n.inputs[1]->accumulate(std::move(g.b));
                        n.inputs[2]->accumulate(std::move(g.c));
                        if (n.inputs[3]->requires_grad) {
                          Tensor<T> full(fm.shape());
                          std::copy(g.logits.data().begin(), g.logits.data().end(),
                                    full.data().begin() + first * fm.plane_size());
                          n.inputs[3]->accumulate(std::move(full));
                        }
                      });
}

}  // namespace ag

struct LsrFusionConfig {
  std::array<std::size_t, 4> widths{32, 64, 128, 256};
};

/// Encoder-decoder predicting Fm, plus the filter-and-blend reconstruction.
class LsrFusion {
 public:
  static constexpr const char* kPrefix = "fusion_lsr/";
  static constexpr std::size_t kLevels = 4;
  static constexpr std::size_t kDownsampling = 8;

  explicit LsrFusion(LsrFusionConfig config = {}) : config_(config) {}

  const LsrFusionConfig& config() const { return config_; }

  ParamSpecs param_specs() const {
    ParamSpecs specs;
    const auto& wd = config_.widths;
    std::size_t in = kLsrGuidanceChannels;
    for (std::size_t l = 0; l < kLevels; ++l) {
      const std::string e = std::string(kPrefix) + "enc" + std::to_string(l);
      declare_conv(specs, e + "/conv1", in, wd[l]);
      declare_prelu(specs, e + "/act1", wd[l]);
      declare_conv(specs, e + "/conv2", wd[l], wd[l]);
      declare_prelu(specs, e + "/act2", wd[l]);
      in = wd[l];
    }
    for (std::size_t l = kLevels - 1; l-- > 0;) {
      const std::string d = std::string(kPrefix) + "dec" + std::to_string(l);
      declare_conv(specs, d + "/conv1", wd[l + 1] + wd[l], wd[l]);
      declare_prelu(specs, d + "/act1", wd[l]);
      declare_conv(specs, d + "/conv2", wd[l], wd[l]);
      declare_prelu(specs, d + "/act2", wd[l]);
    }
    declare_conv(specs, std::string(kPrefix) + "head", wd[0], kFusionFeatureChannels);
    return specs;
  }

  /// Fm for a 15-channel guidance stack of any size.
  template <typename T>
  ag::Var<T> features(const Params<T>& p, const ag::Var<T>& guidance) const {
    const auto& g = guidance.value();
    if (g.channels() != kLsrGuidanceChannels) {
      throw ShapeError("fusion_lsr: expected 15 guidance channels, got " + std::to_string(g.channels()));
    }
    const std::size_t h = g.height(), w = g.width();
    const std::size_t ph = round_up(h), pw = round_up(w);
    ag::Var<T> x = ag::pad_reflect(guidance, ph, pw);
    std::array<ag::Var<T>, kLevels> skips;
    for (std::size_t l = 0; l < kLevels; ++l) {
      const std::string e = std::string(kPrefix) + "enc" + std::to_string(l);
      x = nn::act(p, e + "/act1", nn::conv(p, e + "/conv1", x, l == 0 ? 1 : 2));
      x = nn::act(p, e + "/act2", nn::conv(p, e + "/conv2", x));
      skips[l] = x;
    }
    for (std::size_t l = kLevels - 1; l-- > 0;) {
      const std::string d = std::string(kPrefix) + "dec" + std::to_string(l);
      const auto& skip = skips[l].value();
      x = ag::concat<T>({ag::resize_bilinear(x, skip.height(), skip.width()), skips[l]});
      x = nn::act(p, d + "/act1", nn::conv(p, d + "/conv1", x));
      x = nn::act(p, d + "/act2", nn::conv(p, d + "/conv2", x));
    }
    x = nn::conv(p, std::string(kPrefix) + "head", x);
    return ag::crop(x, h, w);
  }

  /// Reconstructed HSR-resolution frame for the LSR view.
  template <typename T>
  ag::Var<T> reconstruct(const Params<T>& p, const ag::Var<T>& l_hat, const ag::Var<T>& l1, const ag::Var<T>& l2,
                         const ag::Var<T>& d1, const ag::Var<T>& d2, const ag::Var<T>& f0, const ag::Var<T>& ft) const {
    require_channels(l_hat.value(), 3, "fusion_lsr l_hat");
    const ag::Var<T> fm = features(p, ag::concat<T>({l_hat, l1, l2, d1, d2, f0, ft}));
    const ag::Var<T> l1k = ag::dynamic_filter(l1, fm, kFilter1Channel);
    const ag::Var<T> l2k = ag::dynamic_filter(l2, fm, kFilter2Channel);
    return ag::blend(l1k, l2k, l_hat, fm, kMaskChannel);
  }

 private:
  static std::size_t round_up(std::size_t v) { return (v + kDownsampling - 1) / kDownsampling * kDownsampling; }

  LsrFusionConfig config_;
};

}  // namespace hstr
