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

// Alignment of both captured views onto the timestamp t of each output.
//
// LSR view:  L1 = cascaded warp of R0 along (d0, f_L^{t->0}), L2 likewise from RT.
// HSR view, three complementary branches:
//   R1, R2  own-view splats of R0, RT along t/T and 1 - t/T of the endpoint flows
//   R3, R4  backward warps of R0, RT along the LSR flows carried across by d1, d2
//   R5, R6  the upsampled LSR frame splatted across along d1 and d2

#include <array>

#include "hstr/fusion/hsr.hpp"
#include "hstr/pipeline/clip.hpp"

namespace hstr {

struct SplatParams {
  double alpha = 0.1;  // disparity-driven importance
  double beta = 10.0;  // brightness-constancy importance
};

/// Source indices used by the HSR candidate paths.
enum AlignSource : std::size_t { kSourceR0 = 0, kSourceRT = 1, kSourceLhat = 2 };

template <typename T>
struct AlignmentBundle {
  std::size_t t = 0, interval = 1;
  Frame<T> l_hat;
  Frame<T> l1, l2;
  DisparityMap<T> d1, d2;
  FlowField<T> f_l0, f_lT;
  FlowField<T> f_r_t0, f_r_tT;  // transferred LSR flows on the HSR view
  std::array<Frame<T>, kCandidatePaths> r;
  std::array<Frame<T>, kCandidatePaths> mass;
  std::array<WarpPath<T>, kCandidatePaths> paths;
  Frame<T> r0, rT;  // captured endpoints, kept for the passthrough and feature extraction

  T time() const { return static_cast<T>(t) / static_cast<T>(interval); }
  bool at_endpoint() const { return t == 0 || t == interval; }
};

template <typename T>
AlignmentBundle<T> align(const ClipPair<T>& clip, const EstimatorInputs<T>& est, std::size_t t,
                         const SplatParams& splat = {}) {
  clip.validate();
  const std::size_t interval = clip.interval();
  if (t > interval) throw InputError("align: t = " + std::to_string(t) + " outside 0.." + std::to_string(interval));
  est.validate(interval, clip.height(), clip.width());
  const T alpha = static_cast<T>(splat.alpha), beta = static_cast<T>(splat.beta);
  const Frame<T>& r0 = clip.hsr_endpoints[0];
  const Frame<T>& rT = clip.hsr_endpoints[1];

  AlignmentBundle<T> b;
  b.t = t;
  b.interval = interval;
  b.r0 = r0;
  b.rT = rT;
  b.l_hat = clip.upsampled(t);
  b.f_l0 = est.flow_l_to_0[t];
  b.f_lT = est.flow_l_to_T[t];
  b.l1 = cascaded_warp(r0, est.d0, b.f_l0);
  b.l2 = cascaded_warp(rT, est.dT, b.f_lT);
  b.d1 = propagate_disparity(est.d0, b.f_l0);
  b.d2 = propagate_disparity(est.dT, b.f_lT);

  const T tt = b.time();
  auto own_view = [&](std::size_t i, std::size_t source, const Frame<T>& src, const Frame<T>& other,
                      const FlowField<T>& full, T fraction) {
    WarpPath<T>& path = b.paths[i];
    path.kind = WarpKind::kSplat;
    path.source = source;
    path.flow = scale_flow(full, fraction);
    path.log_importance = splat_log_importance(
        SplatWeightMode<T>(BrightnessConstancy<T>{src, other, beta, full}), path.flow);
    auto out = forward_splat_weighted(src, path.flow, path.log_importance);
    b.r[i] = std::move(out.image);
    b.mass[i] = std::move(out.mass);
  };
  own_view(0, kSourceR0, r0, rT, est.flow_r_0_to_T, tt);
  own_view(1, kSourceRT, rT, r0, est.flow_r_T_to_0, T(1) - tt);

  auto cross_flow = [&](std::size_t i, std::size_t source, const Frame<T>& src, const FlowField<T>& f_l,
                        const DisparityMap<T>& d, FlowField<T>& f_r) {
    auto moved = transfer_flow(f_l, d, alpha);
    f_r = std::move(moved.image);
    WarpPath<T>& path = b.paths[i];
    path.kind = WarpKind::kBackward;
    path.source = source;
    path.flow = f_r;
    b.r[i] = backward_warp(src, f_r);
    b.mass[i] = std::move(moved.mass);
  };
  cross_flow(2, kSourceR0, r0, b.f_l0, b.d1, b.f_r_t0);
  cross_flow(3, kSourceRT, rT, b.f_lT, b.d2, b.f_r_tT);

  auto appearance = [&](std::size_t i, const DisparityMap<T>& d) {
    WarpPath<T>& path = b.paths[i];
    path.kind = WarpKind::kSplat;
    path.source = kSourceLhat;
    path.flow = disparity_to_flow(d);
    path.log_importance = splat_log_importance(SplatWeightMode<T>(DisparityMagnitude<T>{d, alpha}), path.flow);
    auto out = forward_splat_weighted(b.l_hat, path.flow, path.log_importance);
    b.r[i] = std::move(out.image);
    b.mass[i] = std::move(out.mass);
  };
  appearance(4, b.d1);
  appearance(5, b.d2);
  return b;
}

}  // namespace hstr
