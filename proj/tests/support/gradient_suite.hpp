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

// Finite-difference checks for every operator with a hand-written backward
// pass. Each check draws its own random problem from a seed, forms a scalar
// loss <G, op(inputs)> with random G, and compares the analytic gradient of
// every differentiable input against central differences.

#include <functional>
#include <string>
#include <vector>

#include "check.hpp"
#include "hstr/core/activation.hpp"
#include "hstr/core/conv.hpp"
#include "hstr/core/resize.hpp"
#include "hstr/fusion/hsr.hpp"
#include "hstr/fusion/lsr.hpp"
#include "hstr/warp/warp.hpp"

namespace hstr::testing {

using Tn = Tensor<double>;

struct GradientCase {
  std::string name;
  std::function<FdReport(std::uint64_t seed)> run;
};

namespace grad_detail {

inline std::size_t dim(Rng& rng, std::size_t lo = 2, std::size_t hi = 16) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Disparity whose landing positions x + d stay clear of integers.
inline Tn random_disparity(std::size_t h, std::size_t w, Rng& rng, double range = 2.5) {
  Tn d = Tn::raster(1, h, w);
  std::uniform_real_distribution<double> dist(-range, range);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double v;
      do v = dist(rng);
      while (frac_distance(static_cast<double>(x) + v) < 0.02);
      d.at(0, y, x) = v;
    }
  return d;
}

inline FdReport backward_warp_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng), c = dim(rng, 1, 3);
  Tn src = random_tensor({c, h, w}, rng, 0, 1), flow = random_flow(h, w, rng);
  const Tn g = random_tensor({c, h, w}, rng);
  const auto an = backward_warp_backward(src, flow, g);
  auto loss = [&] { return dot(g, backward_warp(src, flow)); };
  FdReport r = fd_check(src, an.src, loss);
  merge(r, fd_check(flow, an.flow, loss));
  return r;
}

inline FdReport forward_splat_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng), c = dim(rng, 1, 3);
  Tn src = random_tensor({c, h, w}, rng, 0, 1), flow = random_flow(h, w, rng);
  Tn z = random_tensor({1, h, w}, rng, -2, 2);
  const Tn g = random_tensor({c, h, w}, rng), gm = random_tensor({1, h, w}, rng);
  const auto an = forward_splat_backward(src, flow, z, g, &gm);
  auto loss = [&] {
    const auto o = forward_splat_weighted(src, flow, z);
    return dot(g, o.image) + dot(gm, o.mass);
  };
  FdReport r = fd_check(src, an.src, loss);
  merge(r, fd_check(flow, an.flow, loss));
  merge(r, fd_check(z, an.log_importance, loss));
  return r;
}

inline FdReport brightness_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng);
  Tn ref = random_tensor({3, h, w}, rng, 0, 1), tgt = random_tensor({3, h, w}, rng, 0, 1);
  Tn span = random_flow(h, w, rng);
  const Tn flow = random_flow(h, w, rng), gz = random_tensor({1, h, w}, rng);
  const double beta = 10;
  const auto an = brightness_importance_backward(ref, tgt, span, beta, gz);
  auto loss = [&] {
    return dot(gz, splat_log_importance(SplatWeightMode<double>(BrightnessConstancy<double>{ref, tgt, beta, span}), flow));
  };
  FdReport r = fd_check(ref, an.reference, loss);
  merge(r, fd_check(tgt, an.target, loss));
  merge(r, fd_check(span, an.span_flow, loss));
  return r;
}

inline FdReport cascaded_warp_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng);
  Tn hsr = random_tensor({3, h, w}, rng, 0, 1), fl = random_flow(h, w, rng), d;
  do d = random_tensor({1, h, w}, rng, -2, 2);
  while (!landing_clear(cascaded_flow(d, fl), 0.02));
  const Tn g = random_tensor({3, h, w}, rng);
  const auto an = cascaded_warp_backward(hsr, d, fl, g);
  auto loss = [&] { return dot(g, cascaded_warp(hsr, d, fl)); };
  FdReport r = fd_check(hsr, an.hsr, loss);
  merge(r, fd_check(d, an.disparity, loss));
  merge(r, fd_check(fl, an.flow, loss));
  return r;
}

inline FdReport propagate_disparity_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng);
  Tn d = random_tensor({1, h, w}, rng, -3, 3), fl = random_flow(h, w, rng);
  const Tn g = random_tensor({1, h, w}, rng);
  const auto an = propagate_disparity_backward(d, fl, g);
  auto loss = [&] { return dot(g, propagate_disparity(d, fl)); };
  FdReport r = fd_check(d, an.src, loss);
  merge(r, fd_check(fl, an.flow, loss));
  return r;
}

inline FdReport disparity_splat_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng), c = dim(rng, 1, 3);
  Tn src = random_tensor({c, h, w}, rng, 0, 1), d = random_disparity(h, w, rng);
  const Tn g = random_tensor({c, h, w}, rng), gm = random_tensor({1, h, w}, rng);
  const double alpha = 0.1 + static_cast<double>(seed % 7) * 0.2;
  const auto an = disparity_splat_backward(src, d, alpha, g, &gm);
  auto loss = [&] {
    const auto o = disparity_splat(src, d, alpha);
    return dot(g, o.image) + dot(gm, o.mass);
  };
  FdReport r = fd_check(src, an.src, loss);
  merge(r, fd_check(d, an.disparity, loss));
  return r;
}

inline FdReport transfer_flow_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng);
  Tn fl = random_tensor({2, h, w}, rng, -3, 3), d = random_disparity(h, w, rng);
  const Tn g = random_tensor({2, h, w}, rng);
  const auto an = transfer_flow_backward(fl, d, 0.1, g);
  auto loss = [&] { return dot(g, transfer_flow(fl, d, 0.1).image); };
  FdReport r = fd_check(fl, an.src, loss);
  merge(r, fd_check(d, an.disparity, loss));
  return r;
}

inline FdReport warp_appearance_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng), w = dim(rng);
  Tn img = random_tensor({3, h, w}, rng, 0, 1), d = random_disparity(h, w, rng);
  const Tn g = random_tensor({3, h, w}, rng);
  const auto an = warp_appearance_backward(img, d, 0.1, g);
  auto loss = [&] { return dot(g, warp_appearance(img, d, 0.1).image); };
  FdReport r = fd_check(img, an.src, loss);
  merge(r, fd_check(d, an.disparity, loss));
  return r;
}

inline FdReport dynamic_filter_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 1), w = dim(rng, 1), first = seed % 2 ? kFilter2Channel : kFilter1Channel;
  Tn img = random_tensor({3, h, w}, rng, 0, 1), filters = random_tensor({first + kFilterTaps, h, w}, rng);
  const Tn g = random_tensor({3, h, w}, rng);
  const auto an = apply_dynamic_filter_backward(img, filters, first, g);
  Tn an_full(filters.shape());
  std::copy(an.filters.data().begin(), an.filters.data().end(), an_full.data().begin() + static_cast<std::ptrdiff_t>(first * h * w));
  auto loss = [&] { return dot(g, apply_dynamic_filter(img, filters, first)); };
  FdReport r = fd_check(img, an.img, loss);
  merge(r, fd_check(filters, an_full, loss));
  return r;
}

inline FdReport blend_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 1), w = dim(rng, 1), first = seed % 3;
  Tn a = random_tensor({3, h, w}, rng, 0, 1), b = random_tensor({3, h, w}, rng, 0, 1);
  Tn c = random_tensor({3, h, w}, rng, 0, 1), logits = random_tensor({first + 3, h, w}, rng, -3, 3);
  const Tn g = random_tensor({3, h, w}, rng);
  const auto an = blend_backward(a, b, c, logits, first, g);
  Tn an_logits(logits.shape());
  std::copy(an.logits.data().begin(), an.logits.data().end(), an_logits.data().begin() + static_cast<std::ptrdiff_t>(first * h * w));
  auto loss = [&] { return dot(g, blend(a, b, c, logits, first)); };
  FdReport r = fd_check(a, an.a, loss);
  merge(r, fd_check(b, an.b, loss));
  merge(r, fd_check(c, an.c, loss));
  merge(r, fd_check(logits, an_logits, loss));
  return r;
}

inline FdReport conv_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 1), w = dim(rng, 1), ci = dim(rng, 1, 4), co = dim(rng, 1, 4);
  const std::size_t k = seed % 3 == 0 ? 1 : 3, stride = seed % 2 ? 2 : 1;
  Tn x = random_tensor({ci, h, w}, rng), wt = random_tensor({co, ci, k, k}, rng), b = random_tensor({co}, rng);
  const Tn probe = conv2d(x, wt, b, stride);
  const Tn g = random_tensor(probe.shape(), rng);
  const auto an = conv2d_backward(x, wt, b, stride, g);
  auto loss = [&] { return dot(g, conv2d(x, wt, b, stride)); };
  FdReport r = fd_check(x, an.input, loss);
  merge(r, fd_check(wt, an.weight, loss));
  merge(r, fd_check(b, an.bias, loss));
  return r;
}

inline FdReport prelu_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 1), w = dim(rng, 1), c = dim(rng, 1, 4);
  Tn x = random_tensor({c, h, w}, rng), slope = random_tensor({c}, rng, 0, 0.5);
  for (auto& v : x.data())
    if (std::abs(v) < 1e-3) v = 0.5;  // keep away from the kink
  const Tn g = random_tensor({c, h, w}, rng);
  const auto an = prelu_backward(x, slope, g);
  auto loss = [&] { return dot(g, prelu(x, slope)); };
  FdReport r = fd_check(x, an.input, loss);
  merge(r, fd_check(slope, an.slope, loss));
  return r;
}

inline FdReport resize_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 1), w = dim(rng, 1), oh = dim(rng, 1), ow = dim(rng, 1);
  Tn x = random_tensor({2, h, w}, rng);
  const Tn g = random_tensor({2, oh, ow}, rng);
  const Tn an = resize_bilinear_backward(g, h, w);
  return fd_check(x, an, [&] { return dot(g, resize_bilinear(x, oh, ow)); });
}

inline FdReport softmax_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 1), w = dim(rng, 1), c = dim(rng, 2, 5);
  Tn x = random_tensor({c, h, w}, rng, -4, 4);
  const Tn g = random_tensor({c, h, w}, rng);
  const Tn an = channel_softmax_backward(channel_softmax(x), g);
  return fd_check(x, an, [&] { return dot(g, channel_softmax(x)); });
}

// Network checks use reduced widths; the operators do not depend on them.
// A larger step would make PReLU kink crossings likely somewhere in a deep
// stack, so networks keep the small step; parameters are sampled.

inline constexpr double kNetworkStep = 1e-6;
inline constexpr std::size_t kNetworkParamSamples = 24;

inline FdReport check_params(WeightStore<double>& store, const Params<double>& p, const std::function<double()>& loss,
                             Rng& rng) {
  std::vector<std::string> names;
  for (const auto& [name, var] : p.vars()) names.push_back(name);
  std::shuffle(names.begin(), names.end(), rng);
  names.resize(std::min(names.size(), kNetworkParamSamples));
  FdReport r;
  for (const auto& name : names) {
    const auto& var = p(name);
    const Tn analytic = var.grad().empty() ? Tn(var.value().shape()) : var.grad();
    merge(r, fd_check(store.mutable_get(name), analytic, loss, 1, &rng, kNetworkStep));
  }
  return r;
}


inline FdReport grid_network_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 4, 16), w = dim(rng, 4, 16);
  const HsrFusion net(HsrFusionConfig{{2, 3, 3}, {3, 4, 4}});
  const ParamSpecs specs = net.param_specs();
  WeightStore<double> store;
  initialise(store, specs, seed);
  for (auto& [name, t] : store.tensors()) {
    if (name.ends_with("/bias"))
      for (auto& v : t.data()) v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
  }
  std::vector<Tn> sources;
  for (int i = 0; i < 3; ++i) sources.push_back(random_tensor({3, h, w}, rng, 0, 1));
  std::array<Tn, kCandidatePaths> frames;
  std::array<WarpPath<double>, kCandidatePaths> paths;
  for (std::size_t i = 0; i < kCandidatePaths; ++i) {
    frames[i] = random_tensor({3, h, w}, rng, 0, 1);
    paths[i].kind = i == 2 || i == 3 ? WarpKind::kBackward : WarpKind::kSplat;
    paths[i].source = i < 4 ? i % 2 : 2;
    paths[i].flow = random_flow(h, w, rng);
    paths[i].log_importance = random_tensor({1, h, w}, rng, -1, 1);
  }
  const Tn probe = [&] {
    const Params<double> p(store, specs, false);
    std::array<ag::Var<double>, kCandidatePaths> fv;
    for (std::size_t i = 0; i < kCandidatePaths; ++i) fv[i] = ag::constant(frames[i]);
    return net.reconstruct(p, {ag::constant(sources[0]), ag::constant(sources[1]), ag::constant(sources[2])}, fv, paths)
        .value();
  }();
  const Tn g = random_tensor(probe.shape(), rng);
  auto build = [&](bool trainable, std::vector<ag::Var<double>>* src_vars, std::array<ag::Var<double>, kCandidatePaths>* fv,
                   const Params<double>& p) {
    for (const auto& s : sources) src_vars->push_back(ag::Var<double>(s, trainable));
    for (std::size_t i = 0; i < kCandidatePaths; ++i) (*fv)[i] = ag::Var<double>(frames[i], trainable);
    return ag::dot(net.reconstruct(p, *src_vars, *fv, paths), g);
  };
  auto loss = [&] {
    const Params<double> p(store, specs, false);
    std::vector<ag::Var<double>> sv;
    std::array<ag::Var<double>, kCandidatePaths> fv;
    return build(false, &sv, &fv, p).value()[0];
  };
  const Params<double> p(store, specs, true);
  std::vector<ag::Var<double>> sv;
  std::array<ag::Var<double>, kCandidatePaths> fv;
  ag::backward(build(true, &sv, &fv, p));
  FdReport r = check_params(store, p, loss, rng);
  for (std::size_t i = 0; i < 3; ++i) merge(r, fd_check(sources[i], sv[i].grad(), loss, 3, &rng, kNetworkStep));
  for (std::size_t i = 0; i < kCandidatePaths; ++i) merge(r, fd_check(frames[i], fv[i].grad(), loss, 2, &rng, kNetworkStep));
  return r;
}

inline FdReport lsr_network_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t h = dim(rng, 3, 16), w = dim(rng, 3, 16);
  const LsrFusion net(LsrFusionConfig{{3, 4, 4, 5}});
  const ParamSpecs specs = net.param_specs();
  WeightStore<double> store;
  initialise(store, specs, seed);
  // Small head weights keep the predicted filters in a moderate range.
  for (auto& v : store.mutable_get(std::string(LsrFusion::kPrefix) + "head/weight").data()) v *= 0.3;
  std::array<Tn, 7> in{random_tensor({3, h, w}, rng, 0, 1), random_tensor({3, h, w}, rng, 0, 1),
                       random_tensor({3, h, w}, rng, 0, 1), random_tensor({1, h, w}, rng, -2, 2),
                       random_tensor({1, h, w}, rng, -2, 2), random_tensor({2, h, w}, rng, -2, 2),
                       random_tensor({2, h, w}, rng, -2, 2)};
  const Tn g = random_tensor({3, h, w}, rng);
  auto build = [&](bool trainable, std::vector<ag::Var<double>>& vars, const Params<double>& p) {
    for (const auto& t : in) vars.push_back(ag::Var<double>(t, trainable));
    return ag::dot(net.reconstruct(p, vars[0], vars[1], vars[2], vars[3], vars[4], vars[5], vars[6]), g);
  };
  auto loss = [&] {
    const Params<double> p(store, specs, false);
    std::vector<ag::Var<double>> vars;
    return build(false, vars, p).value()[0];
  };
  const Params<double> p(store, specs, true);
  std::vector<ag::Var<double>> vars;
  ag::backward(build(true, vars, p));
  FdReport r = check_params(store, p, loss, rng);
  for (std::size_t i = 0; i < in.size(); ++i) merge(r, fd_check(in[i], vars[i].grad(), loss, 4, &rng, kNetworkStep));
  return r;
}

}  // namespace grad_detail

inline std::vector<GradientCase> gradient_cases() {
  using namespace grad_detail;
  return {
      {"backward_warp", backward_warp_case},
      {"forward_splat", forward_splat_case},
      {"brightness_importance", brightness_case},
      {"cascaded_warp", cascaded_warp_case},
      {"propagate_disparity", propagate_disparity_case},
      {"disparity_splat", disparity_splat_case},
      {"transfer_flow", transfer_flow_case},
      {"warp_appearance", warp_appearance_case},
      {"dynamic_filter", dynamic_filter_case},
      {"blend", blend_case},
      {"conv2d", conv_case},
      {"prelu", prelu_case},
      {"resize_bilinear", resize_case},
      {"channel_softmax", softmax_case},
      {"grid_network", grid_network_case},
      {"lsr_network", lsr_network_case},
  };
}

inline constexpr double kGradientTolerance = 1e-4;

}  // namespace hstr::testing
