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

// Named parameter store and its container file.
//
// Container layout:
//   bytes 0..7   magic "HSTRWGT1"
//   bytes 8..15  manifest length N, uint64 little-endian
//   N bytes      UTF-8 JSON manifest:
//                {"format": "hstr-weights", "version": 1, "meta": {...},
//                 "tensors": {name: {"shape": [...], "dtype": "f32"|"f64",
//                                    "offset": byte offset into payload,
//                                    "nbytes": byte length}}}
//   payload      raw little-endian arrays, row-major, at the stated offsets

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hstr/core/field_io.hpp"
#include "hstr/core/tensor.hpp"

namespace hstr {

inline constexpr char kWeightMagic[8] = {'H', 'S', 'T', 'R', 'W', 'G', 'T', '1'};

template <typename T>
class WeightStore {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  const Tensor<T>& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InputError("missing weight '" + name + "'");
    return it->second;
  }

  /// Looks up a parameter and checks its shape against the consuming layer.
  const Tensor<T>& get(const std::string& name, const std::vector<std::size_t>& shape) const {
    const auto& t = get(name);
    if (t.shape() != shape) {
      throw ShapeError("weight '" + name + "' has shape " + t.shape_string() + ", layer expects " +
                       Tensor<T>::shape_string(shape));
    }
    return t;
  }

  Tensor<T>& mutable_get(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InputError("missing weight '" + name + "'");
    return it->second;
  }

  void set(const std::string& name, Tensor<T> value) {
    if (!value.all_finite()) throw NumericError("weight '" + name + "' has non-finite entries");
    tensors_[name] = std::move(value);
  }

  const Map& tensors() const { return tensors_; }
  Map& tensors() { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
  }

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  template <typename U>
  WeightStore<U> cast() const {
    WeightStore<U> out;
    for (const auto& [name, t] : tensors_) out.tensors()[name] = Tensor<U>::cast(t);
    out.meta() = meta_;
    return out;
  }

 private:
  Map tensors_;
  nlohmann::json meta_ = nlohmann::json::object();
};

template <typename T>
std::vector<char> encode_weights(const WeightStore<T>& store, bool as_f64 = false) {
  nlohmann::json manifest;
  manifest["format"] = "hstr-weights";
  manifest["version"] = 1;
  manifest["meta"] = store.meta();
  manifest["tensors"] = nlohmann::json::object();
  std::vector<char> payload;
  for (const auto& [name, t] : store.tensors()) {
    const std::size_t offset = payload.size();
    for (const T v : t.data()) {
      if (as_f64) {
        detail::store_scalar(payload, static_cast<double>(v));
      } else {
        detail::store_scalar(payload, static_cast<float>(v));
      }
    }
    manifest["tensors"][name] = {{"shape", t.shape()},
                                 {"dtype", as_f64 ? "f64" : "f32"},
                                 {"offset", offset},
                                 {"nbytes", payload.size() - offset}};
  }
  const std::string text = manifest.dump();
  std::vector<char> out(std::begin(kWeightMagic), std::end(kWeightMagic));
  detail::store_scalar(out, static_cast<std::uint64_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

template <typename T>
WeightStore<T> decode_weights(const std::vector<char>& bytes, const std::string& name = "<memory>") {
  if (bytes.size() < 16 || !std::equal(std::begin(kWeightMagic), std::end(kWeightMagic), bytes.begin())) {
    throw FormatError(name + ": not a weight container (bad magic)");
  }
  const auto len = detail::load_scalar<std::uint64_t>(bytes.data() + 8, true);
  if (len > bytes.size() - 16) throw FormatError(name + ": truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": manifest is not valid JSON: " + e.what());
  }
  if (manifest.value("format", "") != "hstr-weights") throw FormatError(name + ": unexpected manifest format");
  const std::size_t base = 16 + static_cast<std::size_t>(len);
  WeightStore<T> store;
  if (manifest.contains("meta")) store.meta() = manifest["meta"];
  try {
    for (const auto& [tname, entry] : manifest.at("tensors").items()) {
      const auto shape = entry.at("shape").template get<std::vector<std::size_t>>();
      const std::string dtype = entry.at("dtype").template get<std::string>();
      const auto offset = entry.at("offset").template get<std::size_t>();
      const std::size_t width = dtype == "f64" ? 8 : dtype == "f32" ? 4 : 0;
      if (width == 0) throw FormatError(name + ": unsupported dtype '" + dtype + "' for " + tname);
      const std::size_t count = Tensor<T>::element_count(shape);
      if (entry.value("nbytes", count * width) != count * width) {
        throw FormatError(name + ": byte length mismatch for " + tname);
      }
      if (base + offset + count * width > bytes.size()) throw FormatError(name + ": truncated payload for " + tname);
      std::vector<T> data(count);
      const char* p = bytes.data() + base + offset;
      for (std::size_t i = 0; i < count; ++i) {
        data[i] = width == 8 ? static_cast<T>(detail::load_scalar<double>(p + i * 8, true))
                             : static_cast<T>(detail::load_scalar<float>(p + i * 4, true));
      }
      store.set(tname, Tensor<T>(shape, std::move(data)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": malformed manifest entry: " + e.what());
  }
  return store;
}

template <typename T>
void save_weights(const std::filesystem::path& path, const WeightStore<T>& store, bool as_f64 = false) {
  detail::write_bytes(path, encode_weights(store, as_f64));
}

template <typename T = float>
WeightStore<T> load_weights(const std::filesystem::path& path) {
  return decode_weights<T>(detail::read_bytes(path), path.string());
}

}  // namespace hstr
