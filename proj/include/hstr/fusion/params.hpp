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

// Parameter declarations shared by the fusion heads, and the glue between a
// WeightStore and the autograd graph.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hstr/autograd/ops.hpp"
#include "hstr/core/weights.hpp"

namespace hstr {

enum class ParamInit { kConvWeight, kZero, kPreluSlope };

struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;
  ParamInit init = ParamInit::kZero;
};

using ParamSpecs = std::vector<ParamSpec>;

inline constexpr double kPreluInitSlope = 0.25;

inline void declare_conv(ParamSpecs& specs, const std::string& name, std::size_t in, std::size_t out,
                         std::size_t kernel = 3) {
  specs.push_back({name + "/weight", {out, in, kernel, kernel}, ParamInit::kConvWeight});
  specs.push_back({name + "/bias", {out}, ParamInit::kZero});
}

inline void declare_prelu(ParamSpecs& specs, const std::string& name, std::size_t channels) {
  specs.push_back({name + "/slope", {channels}, ParamInit::kPreluSlope});
}

/// Fills `store` with freshly initialised parameters. Conv weights are
/// He-normal with the PReLU gain; biases start at zero. With zero = true
/// every parameter, slopes included, is zero.
template <typename T>
void initialise(WeightStore<T>& store, const ParamSpecs& specs, std::uint64_t seed, bool zero = false) {
  std::mt19937_64 rng(seed);
  for (const auto& spec : specs) {
    Tensor<T> t(spec.shape);
    if (!zero) {
      if (spec.init == ParamInit::kConvWeight) {
        const double fan_in = static_cast<double>(spec.shape[1] * spec.shape[2] * spec.shape[3]);
        std::normal_distribution<double> dist(
            0.0, std::sqrt(2.0 / ((1.0 + kPreluInitSlope * kPreluInitSlope) * fan_in)));
        for (auto& v : t.data()) v = static_cast<T>(dist(rng));
      } else if (spec.init == ParamInit::kPreluSlope) {
        t.fill(static_cast<T>(kPreluInitSlope));
      }
    }
    store.set(spec.name, std::move(t));
  }
}

/// Graph-side view of a WeightStore: one Var per parameter.
template <typename T>
class Params {
 public:
  Params(const WeightStore<T>& store, const ParamSpecs& specs, bool trainable) {
    for (const auto& spec : specs) {
      const Tensor<T>& t = store.get(spec.name, spec.shape);
      vars_.emplace(spec.name, ag::Var<T>(t, trainable));
    }
  }

  const ag::Var<T>& operator()(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw InputError("missing weight '" + name + "'");
    return it->second;
  }

  const std::map<std::string, ag::Var<T>>& vars() const { return vars_; }

 private:
  std::map<std::string, ag::Var<T>> vars_;
};

namespace nn {

template <typename T>
ag::Var<T> conv(const Params<T>& p, const std::string& name, const ag::Var<T>& x, std::size_t stride = 1) {
  return ag::conv2d(x, p(name + "/weight"), p(name + "/bias"), stride);
}

template <typename T>
ag::Var<T> act(const Params<T>& p, const std::string& name, const ag::Var<T>& x) {
  return ag::prelu(x, p(name + "/slope"));
}

}  // namespace nn

}  // namespace hstr
