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

// Both fusion heads bound to one WeightStore. The store's manifest metadata
// records the architecture widths and splat parameters so a weight file is
// self-describing.

#include <filesystem>

#include "hstr/fusion/lsr.hpp"
#include "hstr/pipeline/align.hpp"

namespace hstr {

struct ModelConfig {
  LsrFusionConfig lsr;
  HsrFusionConfig hsr;
  SplatParams splat;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"lsr_widths", c.lsr.widths},
          {"extractor_widths", c.hsr.extractor},
          {"grid_widths", c.hsr.grid},
          {"alpha", c.splat.alpha},
          {"beta", c.splat.beta}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    if (j.contains("lsr_widths")) c.lsr.widths = j.at("lsr_widths").get<std::array<std::size_t, 4>>();
    if (j.contains("extractor_widths")) c.hsr.extractor = j.at("extractor_widths").get<std::array<std::size_t, 3>>();
    if (j.contains("grid_widths")) c.hsr.grid = j.at("grid_widths").get<std::array<std::size_t, 3>>();
    c.splat.alpha = j.value("alpha", c.splat.alpha);
    c.splat.beta = j.value("beta", c.splat.beta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight metadata: ") + e.what());
  }
  return c;
}

template <typename T>
class Model {
 public:
  explicit Model(ModelConfig config = {}) : config_(config), lsr_(config.lsr), hsr_(config.hsr) {}

  /// Wraps an existing store; architecture comes from its metadata.
  explicit Model(WeightStore<T> store)
      : Model(model_config_from_json(store.meta())) {
    weights_ = std::move(store);
    weights_.meta() = to_json(config_);
    Params<T>(weights_, specs(), false);  // verifies every declared name and shape
  }

  static Model initialised(ModelConfig config, std::uint64_t seed, bool zero = false) {
    Model m(config);
    initialise(m.weights_, m.lsr_.param_specs(), seed, zero);
    initialise(m.weights_, m.hsr_.param_specs(), seed ^ 0x9e3779b97f4a7c15ULL, zero);
    m.weights_.meta() = to_json(config);
    return m;
  }

  static Model load(const std::filesystem::path& path) { return Model(load_weights<T>(path)); }
  void save(const std::filesystem::path& path, bool as_f64 = false) const { save_weights(path, weights_, as_f64); }

  const ModelConfig& config() const { return config_; }
  const LsrFusion& lsr() const { return lsr_; }
  const HsrFusion& hsr() const { return hsr_; }
  const WeightStore<T>& weights() const { return weights_; }
  WeightStore<T>& weights() { return weights_; }

  ParamSpecs specs() const {
    ParamSpecs s = lsr_.param_specs();
    const ParamSpecs h = hsr_.param_specs();
    s.insert(s.end(), h.begin(), h.end());
    return s;
  }

  Params<T> params(bool trainable) const { return Params<T>(weights_, specs(), trainable); }

  // Graph builders for training and gradient checks.

  ag::Var<T> lsr_graph(const Params<T>& p, const AlignmentBundle<T>& b) const {
    using ag::constant;
    return lsr_.reconstruct(p, constant(b.l_hat), constant(b.l1), constant(b.l2), constant(b.d1), constant(b.d2),
                            constant(b.f_l0), constant(b.f_lT));
  }

  ag::Var<T> hsr_graph(const Params<T>& p, const AlignmentBundle<T>& b) const {
    using ag::constant;
    std::array<ag::Var<T>, kCandidatePaths> frames;
    for (std::size_t i = 0; i < kCandidatePaths; ++i) frames[i] = constant(b.r[i]);
    return hsr_.reconstruct(p, {constant(b.r0), constant(b.rT), constant(b.l_hat)}, frames, b.paths);
  }

  /// Reconstructed LSR-view frame at the bundle's timestamp.
  Frame<T> reconstruct_lsr(const AlignmentBundle<T>& b) const { return lsr_graph(params(false), b).value(); }

  /// Reconstructed HSR-view frame; captured endpoints pass straight through.
  Frame<T> reconstruct_hsr(const AlignmentBundle<T>& b) const {
    if (b.t == 0) return b.r0;
    if (b.t == b.interval) return b.rT;
    return clamp01(hsr_graph(params(false), b).value());
  }

 private:
  ModelConfig config_;
  LsrFusion lsr_;
  HsrFusion hsr_;
  WeightStore<T> weights_;
};

}  // namespace hstr
