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

#include "../support/check.hpp"
#include "../support/warp_oracle.hpp"
#include "hstr/datasim/synth.hpp"
#include "hstr/pipeline/train.hpp"

namespace {

using namespace hstr;
using namespace hstr::testing;
using Tn = Tensor<double>;

const ModelConfig kSmall{{{4, 4, 4, 4}}, {{2, 3, 3}, {3, 4, 4}}, {}};

SynthSpec small_scene(std::size_t size = 8, std::size_t interval = 2) {
  SynthSpec s;
  s.height = s.width = size;
  s.frames = interval + 1;
  s.scale = 2;
  s.interval = interval;
  return s;
}

TrainSample<double> static_sample(std::size_t h, std::size_t w, double d, Rng& rng) {
  TrainSample<double> s;
  s.clip.hsr_endpoints = {random_tensor({3, h, w}, rng, 0, 1), random_tensor({3, h, w}, rng, 0, 1)};
  for (int t = 0; t < 3; ++t) s.clip.lsr_frames.push_back(random_tensor({3, h / 2, w / 2}, rng, 0, 1));
  s.clip.scale = 2;
  s.est.d0 = s.est.dT = Tn::raster(1, h, w, d);
  for (int t = 0; t < 3; ++t) {
    s.est.flow_l_to_0.push_back(Tn::raster(2, h, w));
    s.est.flow_l_to_T.push_back(Tn::raster(2, h, w));
  }
  s.est.flow_r_0_to_T = s.est.flow_r_T_to_0 = Tn::raster(2, h, w);
  return s;
}

// -------------------------------------------------------------- alignment

TEST(Align, StartDegeneratesToDisparityWarp) {
  const SynthScene<double> scene(small_scene(16, 4));
  const auto s = scene.samples().at(0);
  const auto b = align(s.clip, s.est, 0);
  EXPECT_EQ(b.l1, backward_warp(b.r0, disparity_to_flow(s.est.d0)));
  EXPECT_EQ(b.d1, s.est.d0);
  EXPECT_EQ(b.r[0], b.r0);
  const auto e = align(s.clip, s.est, 4);
  EXPECT_EQ(e.l2, backward_warp(e.rT, disparity_to_flow(s.est.dT)));
  EXPECT_EQ(e.r[1], e.rT);
}

TEST(Align, StaticSceneCandidates) {
  Rng rng(1);
  const auto s = static_sample(8, 10, 2.0, rng);
  const auto b = align(s.clip, s.est, 1);
  EXPECT_EQ(b.r[0], b.r0);
  EXPECT_EQ(b.r[1], b.rT);
  EXPECT_EQ(b.r[2], b.r0);
  EXPECT_EQ(b.r[3], b.rT);
  EXPECT_EQ(b.r[4], disparity_splat(b.l_hat, s.est.d0, 0.1).image);
  EXPECT_EQ(b.l_hat, s.clip.upsampled(1));
}

TEST(Align, TranslatingSquareMatchesOracleCompositions) {
  const SynthScene<double> scene(small_scene(8, 2));
  const auto s = scene.samples().at(0);
  const double beta = 10, alpha = 0.1;
  for (std::size_t t = 0; t <= 2; ++t) {
    const auto b = align(s.clip, s.est, t);
    const Tn& r0 = s.clip.hsr_endpoints[0];
    const Tn& rT = s.clip.hsr_endpoints[1];
    auto cascade = [](const Tn& src, const Tn& d, const Tn& f) {
      Tn comp = oracle_backward_warp(disparity_to_flow(d), f);
      comp += f;
      return oracle_backward_warp(src, comp);
    };
    auto brightness_z = [&](const Tn& src, const Tn& other, const Tn& full) {
      const Tn warped = oracle_backward_warp(other, full);
      Tn z = Tn::raster(1, src.height(), src.width());
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < z.size(); ++p) z[p] -= beta * std::abs(src[c * z.size() + p] - warped[c * z.size() + p]);
      return z;
    };
    auto disparity_z = [&](const Tn& d) {
      Tn z = d;
      z *= alpha;
      return z;
    };
    const double tt = static_cast<double>(t) / 2;
    constexpr double tol = 1e-12;
    EXPECT_LT(max_abs_diff(b.l1, cascade(r0, s.est.d0, s.est.flow_l_to_0[t])), tol);
    EXPECT_LT(max_abs_diff(b.l2, cascade(rT, s.est.dT, s.est.flow_l_to_T[t])), tol);
    const Tn d1 = oracle_backward_warp(s.est.d0, s.est.flow_l_to_0[t]);
    const Tn d2 = oracle_backward_warp(s.est.dT, s.est.flow_l_to_T[t]);
    EXPECT_LT(max_abs_diff(b.d1, d1), tol);
    EXPECT_LT(max_abs_diff(b.d2, d2), tol);
    Tn f0 = s.est.flow_r_0_to_T, fT = s.est.flow_r_T_to_0;
    f0 *= tt;
    fT *= 1 - tt;
    EXPECT_LT(max_abs_diff(b.r[0], oracle_forward_splat(r0, f0, brightness_z(r0, rT, s.est.flow_r_0_to_T)).image), tol);
    EXPECT_LT(max_abs_diff(b.r[1], oracle_forward_splat(rT, fT, brightness_z(rT, r0, s.est.flow_r_T_to_0)).image), tol);
    const Tn fr0 = oracle_forward_splat(s.est.flow_l_to_0[t], disparity_to_flow(d1), disparity_z(d1)).image;
    const Tn frT = oracle_forward_splat(s.est.flow_l_to_T[t], disparity_to_flow(d2), disparity_z(d2)).image;
    EXPECT_LT(max_abs_diff(b.r[2], oracle_backward_warp(r0, fr0)), tol);
    EXPECT_LT(max_abs_diff(b.r[3], oracle_backward_warp(rT, frT)), tol);
    EXPECT_LT(max_abs_diff(b.r[4], oracle_forward_splat(b.l_hat, disparity_to_flow(d1), disparity_z(d1)).image), tol);
    EXPECT_LT(max_abs_diff(b.r[5], oracle_forward_splat(b.l_hat, disparity_to_flow(d2), disparity_z(d2)).image), tol);
  }
}

TEST(Align, RejectsOutOfRangeTimeAndBadEstimators) {
  const SynthScene<double> scene(small_scene());
  auto s = scene.samples().at(0);
  EXPECT_THROW(align(s.clip, s.est, 3), InputError);
  s.est.flow_l_to_0.pop_back();
  EXPECT_THROW(align(s.clip, s.est, 0), InputError);
}

// ------------------------------------------------------------------ model

TEST(Model, OutputsAtHsrExtentForEveryTime) {
  const SynthScene<double> scene(small_scene(16, 4));
  const auto s = scene.samples().at(0);
  const auto model = Model<double>::initialised(kSmall, 3);
  for (std::size_t t = 0; t <= 4; ++t) {
    const auto b = align(s.clip, s.est, t);
    EXPECT_EQ(model.reconstruct_lsr(b).shape(), (std::vector<std::size_t>{3, 16, 16}));
    EXPECT_EQ(model.reconstruct_hsr(b).shape(), (std::vector<std::size_t>{3, 16, 16}));
  }
}

TEST(Model, HsrEndpointsPassThrough) {
  const SynthScene<double> scene(small_scene(8, 2));
  const auto s = scene.samples().at(0);
  const auto model = Model<double>::initialised(kSmall, 4);
  EXPECT_EQ(model.reconstruct_hsr(align(s.clip, s.est, 0)), s.clip.hsr_endpoints[0]);
  EXPECT_EQ(model.reconstruct_hsr(align(s.clip, s.est, 2)), s.clip.hsr_endpoints[1]);
}

// Recorded from the first verified run.
TEST(Model, GoldenOutput) {
  const SynthScene<double> scene(small_scene(16, 2));
  const auto s = scene.samples().at(0);
  const auto model = Model<double>::initialised(kSmall, 5);
  const auto b = align(s.clip, s.est, 1);
  double sum = 0;
  const Tn l = model.reconstruct_lsr(b), r = model.reconstruct_hsr(b);
  for (std::size_t i = 0; i < l.size(); ++i) sum += (l[i] + 2 * r[i]) * static_cast<double>(1 + i % 5);
  EXPECT_NEAR(sum, 2901.0564737830646, 1e-8) << std::setprecision(17) << sum;
}

TEST(Model, SaveLoadRoundTrip) {
  TempDir dir;
  const auto model = Model<double>::initialised(kSmall, 6);
  model.save(dir / "w.bin", true);
  const auto back = Model<double>::load(dir / "w.bin");
  EXPECT_EQ(back.config().lsr.widths, kSmall.lsr.widths);
  EXPECT_EQ(back.config().hsr.grid, kSmall.hsr.grid);
  for (const auto& [name, t] : model.weights().tensors()) EXPECT_EQ(back.weights().get(name), t) << name;
}

TEST(Model, LoadRejectsMissingParameter) {
  TempDir dir;
  auto model = Model<double>::initialised(kSmall, 7);
  model.weights().tensors().erase(model.weights().tensors().begin());
  model.save(dir / "w.bin");
  EXPECT_THROW(Model<double>::load(dir / "w.bin"), InputError);
}

// ----------------------------------------------------------------- losses

TEST(Losses, IdenticalFramesGiveZero) {
  Rng rng(2);
  const Tn a = random_tensor({3, 5, 5}, rng);
  EXPECT_EQ(loss_reconstruction(a, a), 0.0);
}

TEST(Losses, ReconstructionIsMeanAbsoluteError) {
  EXPECT_DOUBLE_EQ(loss_reconstruction(Tn::raster(3, 2, 2, 0.25), Tn::raster(3, 2, 2, 0.75)), 0.5);
}

TEST(Losses, SmoothnessOfConstantIsZero) {
  EXPECT_EQ(loss_smooth(Tn::raster(1, 4, 4, 3.0), Tn::raster(1, 4, 4, -1.0)), 0.0);
}

TEST(Losses, SmoothnessOfRamp) {
  // d = x on 4x4: three unit steps per row, no vertical change, over 16 pixels.
  Tn ramp = Tn::raster(1, 4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) ramp.at(0, y, x) = static_cast<double>(x);
  EXPECT_DOUBLE_EQ(total_variation(ramp), 0.75);
  EXPECT_DOUBLE_EQ(loss_smooth(ramp, ramp), 1.5);
}

TEST(Losses, WarpDisparityVanishesAtZeroDisparity) {
  Rng rng(3);
  const Tn r = random_tensor({3, 4, 8}, rng, 0, 1);
  const Tn d = Tn::raster(1, 4, 8);
  EXPECT_EQ(loss_warp_disp(r, r, r, r, d, d), 0.0);
}

TEST(Losses, TotalAppliesWeights) {
  LossParts p{1, 2, 3, 4, 5};
  LossWeights w;
  EXPECT_DOUBLE_EQ(loss_total(p, w), 1 + 2 + 3 + 4 + 0.005 * 5);
  w.lambda_s = -1;
  EXPECT_THROW(loss_total(p, w), InputError);
}

// --------------------------------------------------------------- training

TEST(Adam, FirstStepMatchesClosedForm) {
  WeightStore<double> store;
  store.set("w", Tn({2}, std::vector<double>{1.0, -2.0}));
  const Tn g({2}, std::vector<double>{0.5, -4.0});
  Adam<double> adam(0.1);
  adam.step(store, {{"w", &g}});
  // Bias correction makes the first step lr * g / (|g| + eps).
  EXPECT_NEAR(store.get("w")[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(store.get("w")[1], -2.0 + 0.1 * 4.0 / (4.0 + 1e-8), 1e-15);
  // Second step with the same gradient: m and v corrected to g and g^2 again.
  adam.step(store, {{"w", &g}});
  EXPECT_NEAR(store.get("w")[0], 1.0 - 2 * 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
}

TEST(Train, ZeroLearningRateLeavesWeights) {
  const SynthScene<double> scene(small_scene());
  TrainConfig c;
  c.model = kSmall;
  c.steps = 3;
  c.lr = 0;
  auto model = Model<double>::initialised(kSmall, 1);
  const auto before = model.weights().tensors();
  const auto run = train_fusion(model, scene.samples(), c);
  EXPECT_EQ(run.log.size(), 3u);
  for (const auto& [name, t] : before) EXPECT_EQ(model.weights().get(name), t) << name;
}

TEST(Train, DeterministicPerSeedAndLossFalls) {
  const SynthScene<double> scene(small_scene());
  const auto samples = scene.samples();
  TrainConfig c;
  c.model = kSmall;
  c.steps = 30;
  c.lr = 3e-3;
  c.seed = 4;
  auto a = Model<double>::initialised(kSmall, 4), b = Model<double>::initialised(kSmall, 4);
  const auto ra = train_fusion(a, samples, c), rb = train_fusion(b, samples, c);
  for (std::size_t i = 0; i < ra.log.size(); ++i) EXPECT_EQ(format_step(ra.log[i]), format_step(rb.log[i]));
  const auto bundles = align_all(samples, kSmall.splat);
  const auto init = Model<double>::initialised(kSmall, 4);
  const auto l0 = evaluate_reconstruction(init, samples, bundles), l1 = evaluate_reconstruction(a, samples, bundles);
  EXPECT_LT(l1.l + l1.r, l0.l + l0.r);
}

TEST(Train, StepLogFormat) {
  const TrainStep s{7, 0, 1, 1, 0.5, 0.25, 0.75};
  EXPECT_EQ(format_step(s), "step 7 clip 0 t_l 1 t_r 1 loss_l 5.00000000e-01 loss_r 2.50000000e-01 total 7.50000000e-01");
}

TEST(Train, RejectsEmptyData) {
  TrainConfig c;
  auto m = Model<double>::initialised(kSmall, 1);
  EXPECT_THROW(train_fusion(m, {}, c), InputError);
}

TEST(TrainConfig, ParsesKeysAndComments) {
  const auto c = parse_train_config(
      "# desk run\nsteps = 12\nlr=0.01  # faster\nseed = 9\nlambda_r = 2\nlsr_widths = 4, 8, 8, 16\n"
      "grid_widths = 3,4,5\nbeta = 5\n");
  EXPECT_EQ(c.steps, 12u);
  EXPECT_DOUBLE_EQ(c.lr, 0.01);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.weights.lambda_r, 2);
  EXPECT_EQ(c.model.lsr.widths, (std::array<std::size_t, 4>{4, 8, 8, 16}));
  EXPECT_EQ(c.model.hsr.grid, (std::array<std::size_t, 3>{3, 4, 5}));
  EXPECT_DOUBLE_EQ(c.model.splat.beta, 5);
}

TEST(TrainConfig, ErrorsNameTheLine) {
  try {
    parse_train_config("steps = 3\nbogus = 1\n", "cfg.txt");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_train_config("lr = fast\n"), InputError);
  EXPECT_THROW(parse_train_config("beta1 = 1.0\n"), InputError);
  EXPECT_THROW(parse_train_config("steps\n"), InputError);
  EXPECT_THROW(parse_train_config("grid_widths = 3 4 5\n"), InputError);
  EXPECT_THROW(parse_train_config("lsr_widths = 4,0,8,8\n"), InputError);
}

}  // namespace
