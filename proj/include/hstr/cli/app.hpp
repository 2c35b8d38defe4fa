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

// Argument parsing for the hstr tool. Kept in a header so tests can drive
// the exact command line a user would type.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "hstr/cli/commands.hpp"

namespace hstr::cli {

namespace detail {

inline void add_workers(CLI::App& sub, std::size_t& workers) {
  sub.add_option("-j,--workers", workers,
                 std::string("Worker threads (default: $") + kWorkersEnv + " or 1); outputs do not depend on it")
      ->check(CLI::PositiveNumber);
}

inline void add_bit_depth(CLI::App& sub, int& depth) {
  sub.add_option("--bit-depth", depth, "PNG sample depth of written frames")->check(CLI::IsMember({8, 16}))->capture_default_str();
}

}  // namespace detail

/// Parses argv and runs one subcommand. Messages go to out/err; the return
/// value is the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"hstr: stereo reconstruction of high spatial and temporal resolution video from a hybrid camera pair"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hstr 1.0.0");

  std::size_t workers = 1;
  try {
    workers = default_workers();
  } catch (const InputError& e) {
    err << "warning: " << e.what() << "; using 1 worker\n";
  }

  SimulateOptions sim;
  sim.workers = workers;
  auto* s = app.add_subcommand("simulate", "Degrade a ground-truth stereo pair into a hybrid sequence directory");
  s->add_option("--left", sim.left, "Directory of left-view PNG frames (sorted by name)")->required()->check(CLI::ExistingDirectory);
  s->add_option("--right", sim.right, "Directory of right-view PNG frames (sorted by name)")->required()->check(CLI::ExistingDirectory);
  s->add_option("-o,--out", sim.out, "Output sequence directory")->required();
  s->add_option("-s,--spatial-factor", sim.degrade.spatial_factor, "Left-view edge reduction s")->capture_default_str();
  s->add_option("-m,--temporal-factor", sim.degrade.temporal_factor, "Right-view frame spacing m")->capture_default_str();
  s->add_option("--noise", sim.degrade.noise_sigma, "Gaussian noise sigma added to the left view (8-bit units)")->capture_default_str();
  s->add_option("--blur", sim.degrade.blur_tau, "Odd temporal blur window for the right view")->capture_default_str();
  s->add_option("--desync", sim.degrade.desync, "Left-view frame offset (clamped at the ends)")->capture_default_str();
  s->add_option("--seed", sim.degrade.seed, "Noise seed")->capture_default_str();
  bool no_gt = false;
  s->add_flag("--no-ground-truth", no_gt, "Do not copy ground-truth frames into the sequence");
  detail::add_bit_depth(*s, sim.bit_depth);
  detail::add_workers(*s, sim.workers);

  FuseOptions fuse;
  fuse.workers = workers;
  auto* f = app.add_subcommand("fuse", "Reconstruct both views at full resolution and frame rate");
  f->add_option("--clip", fuse.clip, "Sequence directory (manifest.txt, lsr/, hsr/)")->required()->check(CLI::ExistingDirectory);
  f->add_option("--estimators", fuse.estimators,
                "Estimator directory: disp_0.pfm, disp_T.pfm, flow_L_t{t}_to_0.flo, flow_L_t{t}_to_T.flo, "
                "flow_R_0_to_T.flo, flow_R_T_to_0.flo; segment_NNNN/ subdirectories for multi-segment sequences "
                "(default: <clip>/estimators)");
  f->add_option("-w,--weights", fuse.weights, "Weight file")->required()->check(CLI::ExistingFile);
  f->add_option("-o,--out", fuse.out, "Output directory; frames go to left/ and right/")->required();
  detail::add_bit_depth(*f, fuse.bit_depth);
  detail::add_workers(*f, fuse.workers);

  TrainOptions train;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  auto* t = app.add_subcommand("train", "Train both fusion modules on sequences with ground truth");
  t->add_option("--data", train.data, "Sequence directory or directory of sequence directories; estimators are read from <sequence>/estimators")
      ->required()
      ->check(CLI::ExistingDirectory);
  t->add_option("-c,--config", train.config,
                "Config file of 'key = value' lines: steps, lr, beta1, beta2, eps, seed, lambda_l, lambda_r, lambda_d, "
                "lambda_f, lambda_s, alpha, beta, lsr_widths, extractor_widths, grid_widths")
      ->check(CLI::ExistingFile);
  t->add_option("--init", train.init, "Start from this weight file instead of a seeded initialisation")->check(CLI::ExistingFile);
  t->add_option("-o,--out", train.out, "Output weight file")->required();
  t->add_option("--log", train.log, "Loss log, one line per step (default: <out>.log)");
  auto* steps_opt = t->add_option("--steps", steps, "Override the configured step count");
  auto* seed_opt = t->add_option("--seed", seed, "Override the configured seed");
  t->add_option("--augment", train.augment_copies, "Randomly augmented copies added per clip")->capture_default_str();

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Per-frame PSNR/SSIM of predicted against ground-truth frame directories");
  e->add_option("--pred", eval.pred, "Prediction directory (repeatable, paired in order with --gt)")->required()->check(CLI::ExistingDirectory);
  e->add_option("--gt", eval.gt, "Ground-truth directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  e->add_option("--clip", eval.clip, "Clip name written to the clip column")->capture_default_str();
  e->add_option("-o,--out", eval.out, "CSV output (default: standard output)");

  OptimaOptions opt;
  std::string view = "lsr";
  auto* o = app.add_subcommand("optima", "Optima curve (upper hull) of PSNR against data volume");
  o->add_option("-i,--input", opt.input,
                "Rate CSV with columns spatial_factor, temporal_factor, psnr_lsr, psnr_hsr (volume optional)")
      ->required()
      ->check(CLI::ExistingFile);
  o->add_option("-o,--out", opt.out, "Plot-data output: '# volume psnr' then one vertex per line")->required();
  o->add_option("--view", view, "Which PSNR column to use")->check(CLI::IsMember({"lsr", "hsr"}))->capture_default_str();

  InitOptions init;
  auto* w = app.add_subcommand("init-weights", "Write a freshly initialised weight file");
  w->add_option("-o,--out", init.out, "Output weight file")->required();
  w->add_option("-c,--config", init.config, "Config file supplying architecture widths")->check(CLI::ExistingFile);
  w->add_option("--seed", init.seed, "Initialisation seed")->capture_default_str();
  w->add_flag("--zero", init.zero, "All parameters zero (degenerate but valid outputs)");

  SynthOptions syn;
  auto* y = app.add_subcommand("synth", "Render a procedural stereo sequence with exact estimator files");
  y->add_option("-o,--out", syn.out, "Output sequence directory")->required();
  y->add_option("--height", syn.spec.height, "Full-resolution height")->capture_default_str();
  y->add_option("--width", syn.spec.width, "Full-resolution width")->capture_default_str();
  y->add_option("--frames", syn.spec.frames, "Frame count")->capture_default_str();
  y->add_option("-s,--spatial-factor", syn.spec.scale, "Left-view edge reduction")->capture_default_str();
  y->add_option("-m,--temporal-factor", syn.spec.interval, "Right-view frame spacing")->capture_default_str();
  y->add_option("--seed", syn.spec.seed, "Texture seed")->capture_default_str();
  detail::add_bit_depth(*y, syn.bit_depth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*s) {
      sim.keep_ground_truth = !no_gt;
      const auto r = cmd_simulate(sim);
      out << "wrote " << r.lsr_frames << " LSR frames at " << r.lsr_width << "x" << r.lsr_height << " and "
          << r.hsr_frames << " HSR frames to " << sim.out.string() << "\n";
    } else if (*f) {
      const auto r = cmd_fuse(fuse);
      out << "wrote " << r.left_frames << " left and " << r.right_frames << " right frames at " << r.width << "x"
          << r.height << " to " << fuse.out.string() << "\n";
    } else if (*t) {
      if (*steps_opt) train.steps = steps;
      if (*seed_opt) train.seed = seed;
      const auto r = cmd_train(train);
      out << "trained " << r.log.size() << " steps; weights in " << train.out.string() << "\n";
    } else if (*e) {
      const auto rows = cmd_eval(eval);
      if (eval.out.empty()) out << to_csv(metric_table(rows));
    } else if (*o) {
      opt.view = view == "hsr" ? RateView::kHsr : RateView::kLsr;
      const auto curve = cmd_optima(opt);
      out << "optima curve: " << curve.vertices().size() << " vertices\n";
    } else if (*w) {
      cmd_init_weights(init);
      out << "wrote " << init.out.string() << "\n";
    } else if (*y) {
      cmd_synth(syn);
      out << "wrote synthetic sequence to " << syn.out.string() << "\n";
    }
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const NumericError& ex) {
    err << "numeric failure: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace hstr::cli
