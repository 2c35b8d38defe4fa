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

// Hybrid-camera clips and the externally estimated geometry that goes with them.
//
// Estimator directory layout for an interval-T clip:
//   disp_0.pfm, disp_T.pfm              left-view disparity at both endpoints
//   flow_L_t{t}_to_0.flo  (t = 1..T)    LSR-view backward flow to time 0
//   flow_L_t{t}_to_T.flo  (t = 0..T-1)  LSR-view backward flow to time T
//   flow_R_0_to_T.flo, flow_R_T_to_0.flo HSR-view flow between the endpoints
// The flows that would map a frame onto itself are implied zero.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "hstr/core/field_io.hpp"
#include "hstr/core/resize.hpp"

namespace hstr {

template <typename T>
struct ClipPair {
  std::vector<Frame<T>> lsr_frames;  // timestamps 0..T at LSR resolution
  std::array<Frame<T>, 2> hsr_endpoints;
  std::size_t scale = 1;  // HSR edge length / LSR edge length

  std::size_t interval() const { return lsr_frames.empty() ? 0 : lsr_frames.size() - 1; }
  std::size_t height() const { return hsr_endpoints[0].height(); }
  std::size_t width() const { return hsr_endpoints[0].width(); }

  void validate() const {
    if (lsr_frames.size() < 2) throw InputError("clip needs at least two LSR frames");
    if (scale == 0) throw InputError("clip scale factor must be positive");
    require_channels(hsr_endpoints[0], 3, "clip HSR frame 0");
    Tensor<T>::require_same_shape(hsr_endpoints[0], hsr_endpoints[1], "clip HSR endpoints");
    for (const auto& f : lsr_frames) {
      require_channels(f, 3, "clip LSR frame");
      if (f.height() * scale != height() || f.width() * scale != width()) {
        throw ShapeError("clip LSR frame " + f.shape_string() + " times " + std::to_string(scale) +
                         " does not match HSR " + hsr_endpoints[0].shape_string());
      }
    }
  }

  /// LSR frame t bicubically upsampled onto the HSR grid.
  Frame<T> upsampled(std::size_t t) const { return resize_bicubic(lsr_frames.at(t), height(), width()); }
};

template <typename T>
struct EstimatorInputs {
  DisparityMap<T> d0, dT;
  std::vector<FlowField<T>> flow_l_to_0;  // index t = 0..T; entry 0 is zero
  std::vector<FlowField<T>> flow_l_to_T;  // index t = 0..T; entry T is zero
  FlowField<T> flow_r_0_to_T, flow_r_T_to_0;

  std::size_t interval() const { return flow_l_to_0.empty() ? 0 : flow_l_to_0.size() - 1; }

  void validate(std::size_t interval, std::size_t h, std::size_t w) const {
    if (flow_l_to_0.size() != interval + 1 || flow_l_to_T.size() != interval + 1) {
      throw InputError("estimator flows do not cover interval " + std::to_string(interval));
    }
    auto check = [&](const Tensor<T>& t, std::size_t c, const char* what) {
      require_channels(t, c, what);
      if (t.height() != h || t.width() != w) {
        throw ShapeError(std::string(what) + " is " + t.shape_string() + ", expected " + std::to_string(h) + "x" +
                         std::to_string(w));
      }
    };
    check(d0, 1, "disp_0");
    check(dT, 1, "disp_T");
    for (const auto& f : flow_l_to_0) check(f, 2, "LSR flow to 0");
    for (const auto& f : flow_l_to_T) check(f, 2, "LSR flow to T");
    check(flow_r_0_to_T, 2, "flow_R_0_to_T");
    check(flow_r_T_to_0, 2, "flow_R_T_to_0");
  }
};

/// A clip with its geometry and the ground truth of both views.
template <typename T>
struct TrainSample {
  ClipPair<T> clip;
  EstimatorInputs<T> est;
  std::vector<Frame<T>> gt_left, gt_right;  // timestamps 0..T at HSR resolution

  void validate() const {
    clip.validate();
    est.validate(clip.interval(), clip.height(), clip.width());
    if (gt_left.size() != clip.interval() + 1 || gt_right.size() != clip.interval() + 1) {
      throw InputError("training sample needs ground truth at every timestamp");
    }
    for (std::size_t t = 0; t <= clip.interval(); ++t) {
      Tensor<T>::require_same_shape(gt_left[t], clip.hsr_endpoints[0], "ground-truth left frame");
      Tensor<T>::require_same_shape(gt_right[t], clip.hsr_endpoints[0], "ground-truth right frame");
    }
  }
};

namespace estimator_files {

inline std::string disparity(bool at_end) { return at_end ? "disp_T.pfm" : "disp_0.pfm"; }
inline std::string lsr_flow(std::size_t t, bool to_end) {
  return "flow_L_t" + std::to_string(t) + (to_end ? "_to_T.flo" : "_to_0.flo");
}
inline std::string hsr_flow(bool from_end) { return from_end ? "flow_R_T_to_0.flo" : "flow_R_0_to_T.flo"; }

}  // namespace estimator_files

namespace detail {

inline std::filesystem::path require_file(const std::filesystem::path& dir, const std::string& name) {
  const auto p = dir / name;
  if (!std::filesystem::is_regular_file(p)) throw InputError("missing estimator file: " + p.string());
  return p;
}

}  // namespace detail

template <typename T = float>
EstimatorInputs<T> load_estimators(const std::filesystem::path& dir, std::size_t interval) {
  if (!std::filesystem::is_directory(dir)) throw InputError("estimator directory not found: " + dir.string());
  if (interval == 0) throw InputError("interval must be positive");
  EstimatorInputs<T> est;
  est.d0 = load_pfm<T>(detail::require_file(dir, estimator_files::disparity(false)));
  est.dT = load_pfm<T>(detail::require_file(dir, estimator_files::disparity(true)));
  if (est.d0.channels() != 1 || est.dT.channels() != 1) throw FormatError("disparity PFM files must be grayscale (Pf)");
  const std::size_t h = est.d0.height(), w = est.d0.width();
  for (std::size_t t = 0; t <= interval; ++t) {
    est.flow_l_to_0.push_back(t == 0 ? FlowField<T>::raster(2, h, w)
                                     : load_flo<T>(detail::require_file(dir, estimator_files::lsr_flow(t, false))));
    est.flow_l_to_T.push_back(t == interval
                                  ? FlowField<T>::raster(2, h, w)
                                  : load_flo<T>(detail::require_file(dir, estimator_files::lsr_flow(t, true))));
  }
  est.flow_r_0_to_T = load_flo<T>(detail::require_file(dir, estimator_files::hsr_flow(false)));
  est.flow_r_T_to_0 = load_flo<T>(detail::require_file(dir, estimator_files::hsr_flow(true)));
  est.validate(interval, h, w);
  return est;
}

template <typename T>
void save_estimators(const std::filesystem::path& dir, const EstimatorInputs<T>& est) {
  std::filesystem::create_directories(dir);
  const std::size_t interval = est.interval();
  save_pfm(dir / estimator_files::disparity(false), est.d0);
  save_pfm(dir / estimator_files::disparity(true), est.dT);
  for (std::size_t t = 0; t <= interval; ++t) {
    if (t > 0) save_flo(dir / estimator_files::lsr_flow(t, false), est.flow_l_to_0[t]);
    if (t < interval) save_flo(dir / estimator_files::lsr_flow(t, true), est.flow_l_to_T[t]);
  }
  save_flo(dir / estimator_files::hsr_flow(false), est.flow_r_0_to_T);
  save_flo(dir / estimator_files::hsr_flow(true), est.flow_r_T_to_0);
}

}  // namespace hstr
