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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hstr/core/error.hpp"

namespace hstr {

/// Dense row-major array. Rank-3 tensors are rasters laid out as
/// [channels, height, width] (planar); parameters use other ranks.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  /// Raster constructor: channels x height x width.
  static Tensor raster(std::size_t channels, std::size_t height, std::size_t width, T fill = T(0)) {
    if (channels == 0 || height == 0 || width == 0) {
      throw ShapeError("raster dimensions must be positive");
    }
    return Tensor({channels, height, width}, fill);
  }

  template <typename U>
  static Tensor cast(const Tensor<U>& other) {
    std::vector<T> data(other.size());
    std::transform(other.data().begin(), other.data().end(), data.begin(),
                   [](U v) { return static_cast<T>(v); });
    return Tensor(other.shape(), std::move(data));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() & { return data_; }
  std::span<const T> data() const& { return data_; }
  // A span into a temporary would dangle.
  std::span<const T> data() const&& = delete;
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Raster accessors; valid only for rank-3 tensors.
  std::size_t channels() const { return shape_.at(0); }
  std::size_t height() const { return shape_.at(1); }
  std::size_t width() const { return shape_.at(2); }
  std::size_t plane_size() const { return height() * width(); }

  T& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  std::span<T> plane(std::size_t c) { return std::span<T>(data_).subspan(c * plane_size(), plane_size()); }
  std::span<const T> plane(std::size_t c) const {
    return std::span<const T>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  static std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
  }

  std::string shape_string() const { return shape_string(shape_); }

  static void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape_ != b.shape_) {
      throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

/// H x W x C raster of samples. Image payloads live in [0, 1].
template <typename T>
using Frame = Tensor<T>;
/// Two channels: horizontal then vertical displacement, in pixels.
template <typename T>
using FlowField = Tensor<T>;
/// One channel of horizontal displacement from the left view to the right view.
template <typename T>
using DisparityMap = Tensor<T>;

template <typename T>
void require_raster(const Tensor<T>& t, const char* what) {
  if (t.rank() != 3 || t.channels() == 0 || t.height() == 0 || t.width() == 0) {
    throw ShapeError(std::string(what) + ": expected a non-empty raster, got shape " + t.shape_string());
  }
}

template <typename T>
void require_channels(const Tensor<T>& t, std::size_t channels, const char* what) {
  require_raster(t, what);
  if (t.channels() != channels) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(channels) + " channels, got " +
                     std::to_string(t.channels()));
  }
}

template <typename T>
void require_same_extent(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  require_raster(a, what);
  require_raster(b, what);
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError(std::string(what) + ": spatial extent mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite sample");
}

/// Channels [first, first + count) as a new raster.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, std::size_t first, std::size_t count) {
  require_raster(t, "slice_channels");
  if (count == 0 || first + count > t.channels()) throw ShapeError("slice_channels: range out of bounds");
  Tensor<T> out = Tensor<T>::raster(count, t.height(), t.width());
  std::copy_n(t.data().begin() + first * t.plane_size(), count * t.plane_size(), out.data().begin());
  return out;
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  std::size_t channels = 0;
  for (const auto* p : parts) {
    require_same_extent(*parts[0], *p, "concat_channels");
    channels += p->channels();
  }
  Tensor<T> out = Tensor<T>::raster(channels, parts[0]->height(), parts[0]->width());
  auto it = out.data().begin();
  for (const auto* p : parts) it = std::copy(p->data().begin(), p->data().end(), it);
  return out;
}

template <typename T>
Tensor<T> concat_channels(std::initializer_list<const Tensor<T>*> parts) {
  std::vector<const Tensor<T>*> v(parts);
  return concat_channels<T>(std::span<const Tensor<T>* const>(v));
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T>::require_same_shape(a, b, "max_abs_diff");
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename T>
Tensor<T> clamp01(Tensor<T> t) {
  for (auto& v : t.data()) v = std::clamp(v, T(0), T(1));
  return t;
}

}  // namespace hstr
