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


#include <gtest/gtest.h>

#include <cmath>
#include <iomanip>
#include <numeric>

#include "../support/check.hpp"
#include "hstr/fusion/hsr.hpp"
#include "hstr/fusion/lsr.hpp"

namespace {

using namespace hstr;
using namespace hstr::testing;
using Tn = Tensor<double>;

constexpr LsrFusionConfig kSmallLsr{{4, 4, 4, 4}};
constexpr HsrFusionConfig kSmallHsr{{2, 3, 3}, {3, 4, 4}};

double checksum(const Tn& t) {
  double acc = 0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * static_cast<double>(1 + i % 7);
  return acc;
}

WeightStore<double> store_for(const ParamSpecs& specs, std::uint64_t seed, bool zero = false) {
  WeightStore<double> s;
  initialise(s, specs, seed, zero);
  return s;
}

Tn filter_bank(std::size_t h, std::size_t w, const std::function<double(std::size_t, std::size_t)>& tap) {
  Tn f = Tn::raster(kFilterTaps, h, w);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t p = 0; p < h * w; ++p) f[(5 * i + j) * h * w + p] = tap(i, j);
  return f;
}

// --------------------------------------------------------- dynamic filter

TEST(DynamicFilter, CentreTapIsIdentity) {
  Rng rng(1);
  const Tn img = random_tensor({3, 6, 7}, rng);
  EXPECT_EQ(apply_dynamic_filter(img, filter_bank(6, 7, [](auto i, auto j) { return i == 2 && j == 2 ? 1.0 : 0.0; })), img);
}

TEST(DynamicFilter, BoxOnConstantIsConstant) {
  const Tn out = apply_dynamic_filter(Tn::raster(2, 4, 5, 0.6), filter_bank(4, 5, [](auto, auto) { return 1.0 / 25; }));
  for (double v : out.data()) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(DynamicFilter, BoxOnDeltaMatchesDirectSum) {
  Tn delta = Tn::raster(1, 5, 5);
  delta.at(0, 2, 2) = 1;
  const Tn out = apply_dynamic_filter(delta, filter_bank(5, 5, [](auto, auto) { return 1.0 / 25; }));
  // Every pixel of a 5x5 frame lies within two pixels of the centre.
  for (double v : out.data()) EXPECT_NEAR(v, 1.0 / 25, 1e-16);
}

TEST(DynamicFilter, TapsAreColumnMajorOffsets) {
  // Tap (i, j) reads the source at (x + i - 2, y + j - 2), replicate padded.
  Tn ramp = Tn::raster(1, 1, 6);
  for (std::size_t x = 0; x < 6; ++x) ramp[x] = static_cast<double>(x);
  const Tn out = apply_dynamic_filter(ramp, filter_bank(1, 6, [](auto i, auto j) { return i == 4 && j == 2 ? 1.0 : 0.0; }));
  for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(out[x], std::min<double>(x + 2, 5));
}

// ------------------------------------------------------------------ blend

TEST(Blend, EqualLogitsAverage) {
  Rng rng(2);
  const Tn a = random_tensor({3, 3, 3}, rng), b = random_tensor({3, 3, 3}, rng), c = random_tensor({3, 3, 3}, rng);
  const Tn out = blend(a, b, c, Tn::raster(3, 3, 3));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(out[i], (a[i] + b[i] + c[i]) / 3, 1e-15);
}

TEST(Blend, SaturatedThirdLogitSelectsThirdInput) {
  Rng rng(3);
  const Tn a = random_tensor({3, 4, 4}, rng), b = random_tensor({3, 4, 4}, rng), c = random_tensor({3, 4, 4}, rng);
  Tn logits = Tn::raster(3, 4, 4);
  for (std::size_t p = 0; p < 16; ++p) logits[32 + p] = 30;
  EXPECT_LT(max_abs_diff(blend(a, b, c, logits), c), 1e-9);
}

TEST(Blend, IdenticalInputsAreFixed) {
  Rng rng(4);
  const Tn a = random_tensor({3, 4, 5}, rng);
  EXPECT_LT(max_abs_diff(blend(a, a, a, random_tensor({3, 4, 5}, rng, -9, 9)), a), 1e-15);
}

// ------------------------------------------------------------- LSR fusion

std::vector<ag::Var<double>> lsr_inputs(std::size_t h, std::size_t w, Rng& rng) {
  std::vector<ag::Var<double>> in;
  for (std::size_t c : {3, 3, 3, 1, 1, 2, 2}) in.push_back(ag::constant(random_tensor({c, h, w}, rng, 0, 1)));
  return in;
}

ag::Var<double> run_lsr(const LsrFusion& net, const Params<double>& p, const std::vector<ag::Var<double>>& in) {
  return net.reconstruct(p, in[0], in[1], in[2], in[3], in[4], in[5], in[6]);
}

TEST(LsrFusion, ZeroWeightsGiveZeroFeaturesAndUniformMasks) {
  const LsrFusion net(kSmallLsr);
  const auto store = store_for(net.param_specs(), 1, true);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(5);
  const auto in = lsr_inputs(9, 10, rng);
  const Tn fm = net.features(p, ag::concat(in)).value();
  EXPECT_EQ(fm.shape(), (std::vector<std::size_t>{kFusionFeatureChannels, 9, 10}));
  for (double v : fm.data()) EXPECT_EQ(v, 0.0);
  const Tn m = channel_softmax(fm, kMaskChannel, 3);
  for (double v : m.data()) EXPECT_NEAR(v, 1.0 / 3, 1e-15);
  // Zero filters null both warped candidates, leaving l_hat / 3.
  const Tn out = run_lsr(net, p, in).value();
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], in[0].value()[i] / 3, 1e-15);
}

TEST(LsrFusion, AnySizeKeepsExtent) {
  const LsrFusion net(kSmallLsr);
  const auto store = store_for(net.param_specs(), 2);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(6);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 13}, {16, 8}}) {
    EXPECT_EQ(run_lsr(net, p, lsr_inputs(h, w, rng)).value().shape(), (std::vector<std::size_t>{3, h, w}));
  }
}

TEST(LsrFusion, RejectsWrongGuidanceWidth) {
  const LsrFusion net(kSmallLsr);
  const auto store = store_for(net.param_specs(), 3);
  const Params<double> p(store, net.param_specs(), false);
  EXPECT_THROW(net.features(p, ag::constant(Tn::raster(14, 8, 8))), ShapeError);
}

// Recorded from the first verified run; guards against silent changes.
TEST(LsrFusion, GoldenOutput) {
  const LsrFusion net(kSmallLsr);
  const auto store = store_for(net.param_specs(), 42);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(42);
  const double sum = checksum(run_lsr(net, p, lsr_inputs(12, 10, rng)).value());
  EXPECT_NEAR(sum, 198.57891109584358, 1e-8) << std::setprecision(17) << sum;
}

// ------------------------------------------------------------- HSR fusion

TEST(HsrExtractor, PyramidScales) {
  const HsrFusion net(kSmallHsr);
  const auto store = store_for(net.param_specs(), 4);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(7);
  const auto pyr = net.extract(p, ag::constant(random_tensor({3, 64, 64}, rng, 0, 1)));
  for (std::size_t l = 0; l < kPyramidLevels; ++l) {
    EXPECT_EQ(pyr[l].value().shape(), (std::vector<std::size_t>{kSmallHsr.extractor[l], 64u >> l, 64u >> l}));
  }
}

TEST(HsrExtractor, ZeroWeightsGiveZeroFeatures) {
  const HsrFusion net(kSmallHsr);
  const auto store = store_for(net.param_specs(), 5, true);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(8);
  for (const auto& level : net.extract(p, ag::constant(random_tensor({3, 16, 16}, rng, 0, 1)))) {
    const Tn& v = level.value();
    for (double x : v.data()) EXPECT_EQ(x, 0.0);
  }
}

TEST(HsrExtractor, LinearWithoutBiasOrKink) {
  const HsrFusion net(kSmallHsr);
  auto store = store_for(net.param_specs(), 6);
  for (auto& [name, t] : store.tensors())
    if (name.ends_with("/slope")) t.fill(1.0);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(9);
  const Tn a = random_tensor({3, 12, 12}, rng), b = random_tensor({3, 12, 12}, rng);
  Tn mix = a;
  mix *= 2.0;
  Tn b3 = b;
  b3 *= -3.0;
  mix += b3;
  const auto fa = net.extract(p, ag::constant(a)), fb = net.extract(p, ag::constant(b));
  const auto fm = net.extract(p, ag::constant(mix));
  for (std::size_t l = 0; l < kPyramidLevels; ++l)
    for (std::size_t i = 0; i < fm[l].value().size(); ++i)
      EXPECT_NEAR(fm[l].value()[i], 2 * fa[l].value()[i] - 3 * fb[l].value()[i], 1e-12);
}

std::vector<Tn> pyramid_of(std::size_t h, Rng& rng) {
  return {random_tensor({2, h, h}, rng), random_tensor({3, h / 2, h / 2}, rng), random_tensor({3, h / 4, h / 4}, rng)};
}

TEST(WarpPyramid, ZeroDisplacementKeepsEveryLevel) {
  Rng rng(10);
  const auto pyr = pyramid_of(16, rng);
  for (WarpKind kind : {WarpKind::kBackward, WarpKind::kSplat}) {
    const WarpPath<double> path{kind, 0, Tn::raster(2, 16, 16), Tn::raster(1, 16, 16)};
    const auto out = warp_pyramid(pyr, path);
    for (std::size_t l = 0; l < pyr.size(); ++l) {
      EXPECT_EQ(out[l].image, pyr[l]);
      for (double m : out[l].mass.data()) EXPECT_EQ(m, 1.0);
    }
  }
}

TEST(WarpPyramid, FlowIsRescaledPerLevel) {
  Rng rng(11);
  const auto pyr = pyramid_of(16, rng);
  Tn flow = Tn::raster(2, 16, 16);
  for (std::size_t i = 0; i < 256; ++i) flow[i] = 2.0;
  const WarpPath<double> path{WarpKind::kBackward, 0, flow, {}};
  const auto out = warp_pyramid(pyr, path);
  const Tn& half = pyr[1];
  for (std::size_t c = 0; c < half.channels(); ++c)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(out[1].image.at(c, y, x), half.at(c, y, std::min<std::size_t>(x + 1, 7)));
}

TEST(WarpPyramid, SplatMassIsNonnegative) {
  Rng rng(12);
  const auto pyr = pyramid_of(16, rng);
  const WarpPath<double> path{WarpKind::kSplat, 0, random_tensor({2, 16, 16}, rng, -4, 4), random_tensor({1, 16, 16}, rng)};
  for (const auto& level : warp_pyramid(pyr, path))
    for (double m : level.mass.data()) EXPECT_GE(m, 0.0);
}

struct HsrCase {
  std::vector<ag::Var<double>> sources;
  std::array<ag::Var<double>, kCandidatePaths> frames;
  std::array<WarpPath<double>, kCandidatePaths> paths;
};

HsrCase hsr_case(std::size_t h, std::size_t w, Rng& rng) {
  HsrCase c;
  for (int i = 0; i < 3; ++i) c.sources.push_back(ag::constant(random_tensor({3, h, w}, rng, 0, 1)));
  for (std::size_t i = 0; i < kCandidatePaths; ++i) {
    c.frames[i] = ag::constant(random_tensor({3, h, w}, rng, 0, 1));
    c.paths[i] = {i % 2 ? WarpKind::kSplat : WarpKind::kBackward, i % 3, random_tensor({2, h, w}, rng, -2, 2),
                  random_tensor({1, h, w}, rng)};
  }
  return c;
}

TEST(HsrFusion, ZeroWeightsGiveZeroOutput) {
  const HsrFusion net(kSmallHsr);
  const auto store = store_for(net.param_specs(), 7, true);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(13);
  const auto c = hsr_case(8, 12, rng);
  const Tn out = net.reconstruct(p, c.sources, c.frames, c.paths).value();
  EXPECT_EQ(out.shape(), (std::vector<std::size_t>{3, 8, 12}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(HsrFusion, OutputKeepsExtent) {
  const HsrFusion net(kSmallHsr);
  const auto store = store_for(net.param_specs(), 8);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(14);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{4, 4}, {8, 20}, {12, 16}, {7, 9}}) {
    const auto c = hsr_case(h, w, rng);
    EXPECT_EQ(net.reconstruct(p, c.sources, c.frames, c.paths).value().shape(), (std::vector<std::size_t>{3, h, w}));
  }
}

TEST(HsrFusion, RejectsBadSourceIndex) {
  const HsrFusion net(kSmallHsr);
  const auto store = store_for(net.param_specs(), 9);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(15);
  auto c = hsr_case(8, 8, rng);
  c.paths[3].source = 5;
  EXPECT_THROW(net.reconstruct(p, c.sources, c.frames, c.paths), InputError);
}

TEST(HsrFusion, GoldenOutput) {
  const HsrFusion net(kSmallHsr);
  const auto store = store_for(net.param_specs(), 42);
  const Params<double> p(store, net.param_specs(), false);
  Rng rng(42);
  const auto c = hsr_case(12, 8, rng);
  const double sum = checksum(net.reconstruct(p, c.sources, c.frames, c.paths).value());
  EXPECT_NEAR(sum, -698.64431557153887, 1e-8) << std::setprecision(17) << sum;
}

}  // namespace
