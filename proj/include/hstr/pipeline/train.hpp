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

// Adam training of both fusion heads on clips with known ground truth.
//
// Each step picks a clip, draws t_L uniformly from 0..T for the LSR-view
// loss and, independently, t_R from 1..T-1 for the HSR-view loss (the
// endpoints of the HSR view are captured, not reconstructed), and takes one
// Adam step on lambda_L * L_L + lambda_R * L_R.
//
// Config file: one `key = value` per line, `#` starts a comment.
//   steps, lr, seed, beta1, beta2, eps,
//   lambda_l, lambda_r, lambda_d, lambda_f, lambda_s,
//   alpha, beta,
//   lsr_widths (4 comma-separated), extractor_widths (3), grid_widths (3)

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hstr/pipeline/losses.hpp"
#include "hstr/pipeline/model.hpp"

namespace hstr {

struct TrainConfig {
  std::size_t steps = 500;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  LossWeights weights;
  ModelConfig model;

  void validate() const {
    weights.validate();
    if (!(lr >= 0) || !std::isfinite(lr)) throw InputError("lr must be finite and nonnegative");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw InputError("Adam betas must lie in [0, 1)");
    if (!(eps > 0)) throw InputError("Adam eps must be positive");
    if (!(model.splat.beta > 0) || !(model.splat.alpha >= 0)) throw InputError("need beta > 0 and alpha >= 0");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <std::size_t N>
std::array<std::size_t, N> parse_widths(const std::string& key, const std::string& value) {
  std::array<std::size_t, N> out{};
  std::stringstream ss(value);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i == N) throw InputError(key + ": expected " + std::to_string(N) + " widths");
    const long v = std::stol(trim(item));
    if (v <= 0) throw InputError(key + ": widths must be positive");
    out[i++] = static_cast<std::size_t>(v);
  }
  if (i != N) throw InputError(key + ": expected " + std::to_string(N) + " widths");
  return out;
}

}  // namespace detail

inline TrainConfig parse_train_config(const std::string& text, const std::string& name = "<config>") {
  TrainConfig c;
  using Setter = std::function<void(const std::string&)>;
  auto real = [](double& dst) -> Setter { return [&dst](const std::string& v) { dst = std::stod(v); }; };
  const std::map<std::string, Setter> setters{
      {"steps", [&](const std::string& v) { c.steps = static_cast<std::size_t>(std::stoul(v)); }},
      {"lr", real(c.lr)},
      {"beta1", real(c.beta1)},
      {"beta2", real(c.beta2)},
      {"eps", real(c.eps)},
      {"seed", [&](const std::string& v) { c.seed = std::stoull(v); }},
      {"lambda_l", real(c.weights.lambda_l)},
      {"lambda_r", real(c.weights.lambda_r)},
      {"lambda_d", real(c.weights.lambda_d)},
      {"lambda_f", real(c.weights.lambda_f)},
      {"lambda_s", real(c.weights.lambda_s)},
      {"alpha", real(c.model.splat.alpha)},
      {"beta", real(c.model.splat.beta)},
      {"lsr_widths", [&](const std::string& v) { c.model.lsr.widths = detail::parse_widths<4>("lsr_widths", v); }},
      {"extractor_widths",
       [&](const std::string& v) { c.model.hsr.extractor = detail::parse_widths<3>("extractor_widths", v); }},
      {"grid_widths", [&](const std::string& v) { c.model.hsr.grid = detail::parse_widths<3>("grid_widths", v); }},
  };
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = name + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw InputError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError(where + ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    } catch (const std::exception&) {
      throw InputError(where + ": bad value '" + value + "' for " + key);
    }
  }
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), path.string());
}

/// Adam with bias correction over every tensor of a WeightStore.
template <typename T>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  std::size_t step_count() const { return step_; }

  /// Applies one update from per-name gradients; names without a gradient are left alone.
  void step(WeightStore<T>& store, const std::map<std::string, const Tensor<T>*>& grads) {
    ++step_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (const auto& [name, g] : grads) {
      if (g == nullptr || g->empty()) continue;
      Tensor<T>& w = store.mutable_get(name);
      Tensor<T>::require_same_shape(w, *g, "Adam gradient");
      auto& m = m_[name];
      auto& v = v_[name];
      if (m.empty()) {
        m = std::vector<double>(w.size(), 0.0);
        v = std::vector<double>(w.size(), 0.0);
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>((*g)[i]);
        m[i] = beta1_ * m[i] + (1 - beta1_) * gi;
        v[i] = beta2_ * v[i] + (1 - beta2_) * gi * gi;
        const double update = lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

struct TrainStep {
  std::size_t step = 0, clip = 0, t_l = 0, t_r = 0;
  double loss_l = 0, loss_r = 0, total = 0;
};

inline std::string format_step(const TrainStep& s) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "step %zu clip %zu t_l %zu t_r %zu loss_l %.8e loss_r %.8e total %.8e", s.step,
                s.clip, s.t_l, s.t_r, s.loss_l, s.loss_r, s.total);
  return buf;
}

/// Alignment for every timestamp of every sample; independent of the weights.
template <typename T>
std::vector<std::vector<AlignmentBundle<T>>> align_all(const std::vector<TrainSample<T>>& samples,
                                                       const SplatParams& splat) {
  std::vector<std::vector<AlignmentBundle<T>>> out;
  for (const auto& s : samples) {
    s.validate();
    auto& row = out.emplace_back();
    for (std::size_t t = 0; t <= s.clip.interval(); ++t) row.push_back(align(s.clip, s.est, t, splat));
  }
  return out;
}

/// Whole-clip objective: mean L_L over all timestamps plus mean L_R over the
/// interior ones, averaged over samples.
template <typename T>
LossParts evaluate_reconstruction(const Model<T>& model, const std::vector<TrainSample<T>>& samples,
                                  const std::vector<std::vector<AlignmentBundle<T>>>& bundles) {
  LossParts total;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t interval = samples[i].clip.interval();
    double l = 0, r = 0;
    for (std::size_t t = 0; t <= interval; ++t) {
      l += loss_reconstruction(model.reconstruct_lsr(bundles[i][t]), samples[i].gt_left[t]);
      if (t > 0 && t < interval) r += loss_reconstruction(model.reconstruct_hsr(bundles[i][t]), samples[i].gt_right[t]);
    }
    total.l += l / static_cast<double>(interval + 1);
    if (interval > 1) total.r += r / static_cast<double>(interval - 1);
  }
  total.l /= static_cast<double>(samples.size());
  total.r /= static_cast<double>(samples.size());
  return total;
}

template <typename T>
struct TrainResult {
  std::vector<TrainStep> log;
};

/// Trains `model` in place. `on_step` sees every log entry as it is produced.
template <typename T>
TrainResult<T> train_fusion(Model<T>& model, const std::vector<TrainSample<T>>& samples, const TrainConfig& config,
                            const std::function<void(const TrainStep&)>& on_step = {}) {
  config.validate();
  if (samples.empty()) throw InputError("training needs at least one clip");
  const auto bundles = align_all(samples, model.config().splat);
  std::mt19937_64 rng(config.seed);
  Adam<T> adam(config.lr, config.beta1, config.beta2, config.eps);
  const auto& w = config.weights;
  TrainResult<T> result;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    TrainStep s;
    s.step = step;
    s.clip = std::uniform_int_distribution<std::size_t>(0, samples.size() - 1)(rng);
    const auto& sample = samples[s.clip];
    const std::size_t interval = sample.clip.interval();
    s.t_l = std::uniform_int_distribution<std::size_t>(0, interval)(rng);
    const bool has_interior = interval > 1;
    if (has_interior) s.t_r = std::uniform_int_distribution<std::size_t>(1, interval - 1)(rng);

    const Params<T> p = model.params(true);
    const ag::Var<T> gt_l = ag::constant(sample.gt_left[s.t_l]);
    const ag::Var<T> ll = ag::l1_mean(model.lsr_graph(p, bundles[s.clip][s.t_l]), gt_l);
    s.loss_l = static_cast<double>(ll.value()[0]);
    ag::Var<T> loss = ag::scale(ll, static_cast<T>(w.lambda_l));
    if (has_interior) {
      const ag::Var<T> gt_r = ag::constant(sample.gt_right[s.t_r]);
      const ag::Var<T> lr = ag::l1_mean(model.hsr_graph(p, bundles[s.clip][s.t_r]), gt_r);
      s.loss_r = static_cast<double>(lr.value()[0]);
      loss = ag::add(loss, ag::scale(lr, static_cast<T>(w.lambda_r)));
    }
    s.total = static_cast<double>(loss.value()[0]);
    if (!std::isfinite(s.total)) throw NumericError("training diverged at step " + std::to_string(step));
    ag::backward(loss);
    std::map<std::string, const Tensor<T>*> grads;
    for (const auto& [name, var] : p.vars()) grads.emplace(name, &var.grad());
    adam.step(model.weights(), grads);
    for (const auto& [name, t] : model.weights().tensors()) {
      if (!t.all_finite()) throw NumericError("training diverged at step " + std::to_string(step) + " in " + name);
    }
    result.log.push_back(s);
    if (on_step) on_step(s);
  }
  return result;
}

}  // namespace hstr
