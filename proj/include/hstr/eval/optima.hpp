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

// Rate-quality analysis over spatial/temporal reduction factors.
//
// Each view carries half of the full payload, so reducing the left view's
// edge length by s and the right view's frame rate by m leaves
//   v = 0.5 / s^2 + 0.5 / m
// of the original data. The optima curve is the upper convex hull of the
// (v, PSNR) points, trimmed where it stops rising and held flat beyond.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hstr/core/error.hpp"

namespace hstr {

inline double data_volume(double s, double m) {
  if (!(s > 0) || !(m > 0)) throw InputError("data_volume: factors must be positive");
  return 0.5 / (s * s) + 0.5 / m;
}

struct RatePoint {
  double spatial_factor = 1, temporal_factor = 1;
  double volume = 1;
  double psnr_lsr = 0, psnr_hsr = 0;
};

inline RatePoint make_rate_point(double s, double m, double psnr_lsr, double psnr_hsr) {
  return {s, m, data_volume(s, m), psnr_lsr, psnr_hsr};
}

enum class RateView { kLsr, kHsr };

struct CurvePoint {
  double volume = 0, psnr = 0;
  bool operator==(const CurvePoint&) const = default;
};

class OptimaCurve {
 public:
  explicit OptimaCurve(std::vector<CurvePoint> vertices) : vertices_(std::move(vertices)) {}

  const std::vector<CurvePoint>& vertices() const { return vertices_; }

  /// Linear between adjacent vertices, flat past the last one.
  double evaluate(double v) const {
    if (v < vertices_.front().volume) throw InputError("optima curve: volume below the smallest sample");
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      const auto& a = vertices_[i - 1];
      const auto& b = vertices_[i];
      if (v <= b.volume) return a.psnr + (b.psnr - a.psnr) * (v - a.volume) / (b.volume - a.volume);
    }
    return vertices_.back().psnr;
  }

 private:
  std::vector<CurvePoint> vertices_;
};

/// Upper hull by the monotone chain; collinear points are dropped.
inline std::vector<CurvePoint> upper_hull(std::vector<CurvePoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.volume < b.volume || (a.volume == b.volume && a.psnr < b.psnr);
  });
  std::vector<CurvePoint> hull;
  for (const auto& p : pts) {
    // Equal volumes: only the best PSNR can be on the upper hull.
    if (!hull.empty() && hull.back().volume == p.volume) hull.pop_back();
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      const double cross = (a.volume - o.volume) * (p.psnr - o.psnr) - (a.psnr - o.psnr) * (p.volume - o.volume);
      if (cross < 0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }
  return hull;
}

inline OptimaCurve optima_curve(const std::vector<CurvePoint>& points) {
  if (points.empty()) throw InputError("optima curve needs at least one point");
  auto hull = upper_hull(points);
  const auto best = std::max_element(hull.begin(), hull.end(),
                                     [](const CurvePoint& a, const CurvePoint& b) { return a.psnr < b.psnr; });
  hull.erase(best + 1, hull.end());
  return OptimaCurve(std::move(hull));
}

inline OptimaCurve optima_curve(const std::vector<RatePoint>& points, RateView view) {
  std::vector<CurvePoint> pts;
  pts.reserve(points.size());
  for (const auto& p : points) pts.push_back({p.volume, view == RateView::kLsr ? p.psnr_lsr : p.psnr_hsr});
  return optima_curve(pts);
}

}  // namespace hstr
