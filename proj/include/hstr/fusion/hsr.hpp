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

// Feature-based multi-scale fusion for the HSR-LFR view.
//
// A shared six-layer extractor turns each source frame into a three-level
// pyramid. Every candidate path warps its source pyramid the same way its
// pixel-domain counterpart was warped, and a 3-row x 6-column grid network
// fuses the six warped frames and pyramids into the output frame.
//
// Grid layout, row r at scale 2^-r:
//   columns 0..2: X[r][c] = lateral(X[r][c-1]) + down(X[r-1][c])
//   columns 3..5: X[r][c] = lateral(X[r][c-1]) + up(X[r+1][c])
// where X[r][-1] is the row's input block. Row 0 receives the six warped
// frames next to the full-scale features.

#include <array>
#include <string>
#include <vector>

#include "hstr/fusion/params.hpp"

namespace hstr {

inline constexpr std::size_t kPyramidLevels = 3;
inline constexpr std::size_t kCandidatePaths = 6;
inline constexpr std::size_t kGridRows = 3;
inline constexpr std::size_t kGridCols = 6;

enum class WarpKind { kBackward, kSplat };

/// How one candidate is aligned: a full-resolution displacement, the warp
/// operator, and for splats the full-resolution log-importance.
template <typename T>
struct WarpPath {
  WarpKind kind = WarpKind::kBackward;
  std::size_t source = 0;  // index into the source frames handed to the head
  FlowField<T> flow;
  Tensor<T> log_importance;
};

/// Full-resolution displacement resampled to (h, w) with its vectors
/// rescaled by the per-axis size ratio.
template <typename T>
FlowField<T> rescale_flow(const FlowField<T>& flow, std::size_t h, std::size_t w) {
  require_channels(flow, 2, "rescale_flow");
  if (h == flow.height() && w == flow.width()) return flow;
  FlowField<T> out = resize_bilinear(flow, h, w);
  const T sx = static_cast<T>(w) / static_cast<T>(flow.width());
  const T sy = static_cast<T>(h) / static_cast<T>(flow.height());
  const std::size_t n = h * w;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] *= sx;
    out[n + i] *= sy;
  }
  return out;
}

template <typename T>
Tensor<T> rescale_importance(const Tensor<T>& z, std::size_t h, std::size_t w) {
  if (h == z.height() && w == z.width()) return z;
  return resize_bilinear(z, h, w);
}

/// Warps one feature map of any scale along a path. Backward warps report
/// unit mass everywhere.
template <typename T>
WarpOutput<T> warp_features(const Tensor<T>& features, const WarpPath<T>& path) {
  require_raster(features, "warp_features");
  const std::size_t h = features.height(), w = features.width();
  const FlowField<T> flow = rescale_flow(path.flow, h, w);
  if (path.kind == WarpKind::kBackward) return {backward_warp(features, flow), Frame<T>::raster(1, h, w, T(1))};
  return forward_splat_weighted(features, flow, rescale_importance(path.log_importance, h, w));
}

/// Every level of a pyramid warped along the same path.
template <typename T>
std::vector<WarpOutput<T>> warp_pyramid(const std::vector<Tensor<T>>& pyramid, const WarpPath<T>& path) {
  std::vector<WarpOutput<T>> out;
  out.reserve(pyramid.size());
  for (const auto& level : pyramid) out.push_back(warp_features(level, path));
  return out;
}

namespace ag {

/// Differentiable in the features only; the path geometry is data.
template <typename T>
Var<T> warp_features(const Var<T>& features, const WarpPath<T>& path) {
  const std::size_t h = features.value().height(), w = features.value().width();
  const Var<T> flow = constant(rescale_flow(path.flow, h, w));
  if (path.kind == WarpKind::kBackward) return backward_warp(features, flow);
  return forward_splat(features, flow, constant(rescale_importance(path.log_importance, h, w)));
}

}  // namespace ag

struct HsrFusionConfig {
  std::array<std::size_t, kPyramidLevels> extractor{16, 32, 64};
  std::array<std::size_t, kGridRows> grid{32, 64, 96};
};

template <typename T>
using Pyramid = std::array<ag::Var<T>, kPyramidLevels>;

class HsrFusion {
 public:
  static constexpr const char* kExtractor = "fusion_hsr/extractor/";
  static constexpr const char* kGrid = "fusion_hsr/grid/";

  explicit HsrFusion(HsrFusionConfig config = {}) : config_(config) {}

  const HsrFusionConfig& config() const { return config_; }

  ParamSpecs param_specs() const {
    ParamSpecs specs;
    const auto& ew = config_.extractor;
    std::size_t in = 3;
    for (std::size_t l = 0; l < 6; ++l) {
      const std::size_t out = ew[l / 2];
      declare_conv(specs, extractor_name("conv", l), in, out);
      declare_prelu(specs, extractor_name("act", l), out);
      in = out;
    }
    const auto& gw = config_.grid;
    for (std::size_t r = 0; r < kGridRows; ++r) {
      const std::string b = grid_name("in", r);
      declare_conv(specs, b + "/conv1", row_input_channels(r), gw[r]);
      declare_prelu(specs, b + "/act1", gw[r]);
      declare_conv(specs, b + "/conv2", gw[r], gw[r]);
      for (std::size_t c = 1; c < kGridCols; ++c) declare_pair(specs, grid_name("lat", r, c), gw[r], gw[r]);
    }
    for (std::size_t r = 0; r + 1 < kGridRows; ++r)
      for (std::size_t c = 0; c < kGridCols / 2; ++c) declare_pair(specs, grid_name("down", r, c), gw[r], gw[r + 1]);
    for (std::size_t r = 1; r < kGridRows; ++r)
      for (std::size_t c = kGridCols / 2; c < kGridCols; ++c)
        declare_pair(specs, grid_name("up", r, c), gw[r], gw[r - 1]);
    declare_prelu(specs, std::string(kGrid) + "out/act", gw[0]);
    declare_conv(specs, std::string(kGrid) + "out/conv", gw[0], 3);
    return specs;
  }

  /// Row r input width: the six scale-r features, plus the six frames at row 0.
  std::size_t row_input_channels(std::size_t r) const {
    return kCandidatePaths * config_.extractor[r] + (r == 0 ? kCandidatePaths * 3 : 0);
  }

  template <typename T>
  Pyramid<T> extract(const Params<T>& p, const ag::Var<T>& img) const {
    require_channels(img.value(), 3, "fusion_hsr extractor");
    Pyramid<T> pyr;
    ag::Var<T> x = img;
    for (std::size_t l = 0; l < 6; ++l) {
      const std::size_t stride = (l == 2 || l == 4) ? 2 : 1;
      x = nn::act(p, extractor_name("act", l), nn::conv(p, extractor_name("conv", l), x, stride));
      if (l % 2 == 1) pyr[l / 2] = x;
    }
    return pyr;
  }

  /// Grid fusion of six warped frames and pyramids; the result is not clamped.
  template <typename T>
  ag::Var<T> fuse(const Params<T>& p, const std::array<ag::Var<T>, kCandidatePaths>& frames,
                  const std::array<Pyramid<T>, kCandidatePaths>& pyramids) const {
    const auto& f0 = frames[0].value();
    for (std::size_t i = 0; i < kCandidatePaths; ++i) {
      Tensor<T>::require_same_shape(f0, frames[i].value(), "fusion_hsr frames");
      for (std::size_t r = 0; r < kPyramidLevels; ++r) {
        const auto& lv = pyramids[i][r].value();
        if (lv.channels() != config_.extractor[r] || lv.height() != level_extent(f0.height(), r) ||
            lv.width() != level_extent(f0.width(), r)) {
          throw ShapeError("fusion_hsr: pyramid level " + std::to_string(r) + " has shape " + lv.shape_string());
        }
      }
    }
    std::array<std::array<ag::Var<T>, kGridCols>, kGridRows> x;
    std::array<ag::Var<T>, kGridRows> input;
    for (std::size_t r = 0; r < kGridRows; ++r) {
      std::vector<ag::Var<T>> parts;
      if (r == 0) parts.assign(frames.begin(), frames.end());
      for (const auto& pyr : pyramids) parts.push_back(pyr[r]);
      const std::string b = grid_name("in", r);
      ag::Var<T> v = nn::act(p, b + "/act1", nn::conv(p, b + "/conv1", ag::concat(parts)));
      input[r] = nn::conv(p, b + "/conv2", v);
    }
    for (std::size_t c = 0; c < kGridCols / 2; ++c) {
      for (std::size_t r = 0; r < kGridRows; ++r) {
        ag::Var<T> v = c == 0 ? input[r] : lateral(p, r, c, x[r][c - 1]);
        if (r > 0) v = ag::add(v, down(p, r - 1, c, x[r - 1][c]));
        x[r][c] = v;
      }
    }
    for (std::size_t c = kGridCols / 2; c < kGridCols; ++c) {
      for (std::size_t r = kGridRows; r-- > 0;) {
        ag::Var<T> v = lateral(p, r, c, x[r][c - 1]);
        if (r + 1 < kGridRows) {
          const auto& tgt = v.value();
          v = ag::add(v, up(p, r + 1, c, x[r + 1][c], tgt.height(), tgt.width()));
        }
        x[r][c] = v;
      }
    }
    const std::string o = std::string(kGrid) + "out";
    return nn::conv(p, o + "/conv", nn::act(p, o + "/act", x[0][kGridCols - 1]));
  }

  /// Extracts features for each source once, warps them along every path and
  /// fuses. `frames` are the pixel-domain candidates aligned with `paths`.
  template <typename T>
  ag::Var<T> reconstruct(const Params<T>& p, const std::vector<ag::Var<T>>& sources,
                         const std::array<ag::Var<T>, kCandidatePaths>& frames,
                         const std::array<WarpPath<T>, kCandidatePaths>& paths) const {
    std::vector<Pyramid<T>> src_pyr;
    src_pyr.reserve(sources.size());
    for (const auto& s : sources) src_pyr.push_back(extract(p, s));
    std::array<Pyramid<T>, kCandidatePaths> warped;
    for (std::size_t i = 0; i < kCandidatePaths; ++i) {
      if (paths[i].source >= sources.size()) throw InputError("fusion_hsr: path source index out of range");
      for (std::size_t r = 0; r < kPyramidLevels; ++r)
        warped[i][r] = ag::warp_features(src_pyr[paths[i].source][r], paths[i]);
    }
    return fuse(p, frames, warped);
  }

  static std::size_t level_extent(std::size_t full, std::size_t level) {
    for (std::size_t i = 0; i < level; ++i) full = (full + 1) / 2;
    return full;
  }

 private:
  static std::string extractor_name(const char* kind, std::size_t layer) {
    return std::string(kExtractor) + kind + std::to_string(layer + 1);
  }
  static std::string grid_name(const char* kind, std::size_t r) { return std::string(kGrid) + kind + std::to_string(r); }
  static std::string grid_name(const char* kind, std::size_t r, std::size_t c) {
    return grid_name(kind, r) + "_" + std::to_string(c);
  }

  static void declare_pair(ParamSpecs& specs, const std::string& b, std::size_t in, std::size_t out) {
    declare_prelu(specs, b + "/act1", in);
    declare_conv(specs, b + "/conv1", in, out);
    declare_prelu(specs, b + "/act2", out);
    declare_conv(specs, b + "/conv2", out, out);
  }

  // prelu -> conv(stride) -> prelu -> conv
  template <typename T>
  static ag::Var<T> pair(const Params<T>& p, const std::string& b, const ag::Var<T>& x, std::size_t stride) {
    ag::Var<T> v = nn::conv(p, b + "/conv1", nn::act(p, b + "/act1", x), stride);
    return nn::conv(p, b + "/conv2", nn::act(p, b + "/act2", v));
  }

  template <typename T>
  static ag::Var<T> lateral(const Params<T>& p, std::size_t r, std::size_t c, const ag::Var<T>& x) {
    return ag::add(x, pair(p, grid_name("lat", r, c), x, 1));
  }

  template <typename T>
  static ag::Var<T> down(const Params<T>& p, std::size_t r, std::size_t c, const ag::Var<T>& x) {
    return pair(p, grid_name("down", r, c), x, 2);
  }

  template <typename T>
  static ag::Var<T> up(const Params<T>& p, std::size_t r, std::size_t c, const ag::Var<T>& x, std::size_t h,
                       std::size_t w) {
    return pair(p, grid_name("up", r, c), ag::resize_bilinear(x, h, w), 1);
  }

  HsrFusionConfig config_;
};

}  // namespace hstr
