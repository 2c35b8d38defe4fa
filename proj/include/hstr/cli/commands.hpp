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

// File-driven commands. Each cmd_* function does the work of one subcommand
// and throws on failure; run() maps exceptions to exit codes:
//   0 success, 2 input error, 3 numeric failure, 1 anything else.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hstr/core/parallel.hpp"
#include "hstr/datasim/augment.hpp"
#include "hstr/datasim/synth.hpp"
#include "hstr/eval/metrics.hpp"
#include "hstr/eval/report.hpp"
#include "hstr/pipeline/train.hpp"

namespace hstr::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr const char* kEstimatorDirName = "estimators";

/// Sorted *.png files directly inside dir.
inline std::vector<fs::path> list_png(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no PNG frames in " + dir.string());
  return out;
}

inline std::vector<Frame<float>> load_frames(const std::vector<fs::path>& files, std::size_t workers) {
  std::vector<Frame<float>> frames(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) { frames[i] = load_png<float>(files[i]); });
  return frames;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  fs::path left, right, out;
  DegradeSpec degrade;
  bool keep_ground_truth = true;
  int bit_depth = 8;
  std::size_t workers = 1;
};

struct SimulateSummary {
  std::size_t lsr_frames = 0, hsr_frames = 0;
  std::size_t lsr_height = 0, lsr_width = 0;
};

inline SimulateSummary cmd_simulate(const SimulateOptions& o) {
  const auto lf = list_png(o.left), rf = list_png(o.right);
  if (lf.size() != rf.size()) {
    throw InputError("left and right views hold " + std::to_string(lf.size()) + " and " + std::to_string(rf.size()) +
                     " frames");
  }
  Sequence<float> seq;
  seq.gt_left = load_frames(lf, o.workers);
  seq.gt_right = load_frames(rf, o.workers);
  auto deg = degrade(seq.gt_left, seq.gt_right, o.degrade);
  seq.interval = o.degrade.temporal_factor;
  seq.scale = o.degrade.spatial_factor;
  seq.lsr = std::move(deg.lsr);
  for (std::size_t i = 0; i < deg.hsr_indices.size(); ++i) seq.hsr[deg.hsr_indices[i]] = std::move(deg.hsr[i]);
  for (std::size_t i : deg.lsr_source) seq.lsr_timestamps.push_back(static_cast<double>(i));
  if (!o.keep_ground_truth) {
    seq.gt_left.clear();
    seq.gt_right.clear();
  }
  save_sequence(o.out, seq, o.bit_depth);
  return {seq.lsr.size(), seq.hsr.size(), seq.lsr[0].height(), seq.lsr[0].width()};
}

// -------------------------------------------------------------------- fuse

struct FuseOptions {
  fs::path clip, estimators, weights, out;  // estimators defaults to <clip>/estimators
  int bit_depth = 8;
  std::size_t workers = 1;
};

struct FuseSummary {
  std::size_t left_frames = 0, right_frames = 0;
  std::size_t height = 0, width = 0;
};

/// Writes out/left/<index>.png and out/right/<index>.png for every index
/// covered by a complete segment. A frame shared by two segments is taken
/// from the later one, where it is the segment start.
inline FuseSummary cmd_fuse(const FuseOptions& o) {
  const Sequence<float> seq = load_sequence<float>(o.clip);
  const std::size_t segments = seq.segment_count();
  if (segments == 0) throw InputError(o.clip.string() + ": no complete segment");
  const fs::path est_root = o.estimators.empty() ? o.clip / kEstimatorDirName : o.estimators;
  const Model<float> model = Model<float>::load(o.weights);

  std::vector<ClipPair<float>> clips;
  std::vector<EstimatorInputs<float>> est;
  for (std::size_t k = 0; k < segments; ++k) {
    clips.push_back(seq.segment(k));
    est.push_back(load_segment_estimators(est_root, seq, k));
  }
  struct Job {
    std::size_t segment, t;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t last = k + 1 == segments ? seq.interval : seq.interval - 1;
    for (std::size_t t = 0; t <= last; ++t) jobs.push_back({k, t});
  }
  fs::create_directories(o.out / "left");
  fs::create_directories(o.out / "right");
  parallel_for(jobs.size(), o.workers, [&](std::size_t j) {
    const auto [k, t] = jobs[j];
    const auto bundle = align(clips[k], est[k], t, model.config().splat);
    const Frame<float> l = model.reconstruct_lsr(bundle);
    const Frame<float> r = model.reconstruct_hsr(bundle);
    const std::size_t index = k * seq.interval + t;
    if (!l.all_finite() || !r.all_finite()) throw NumericError("non-finite reconstruction at index " + std::to_string(index));
    save_png(o.out / "left" / frame_filename(index), l, o.bit_depth);
    save_png(o.out / "right" / frame_filename(index), r, o.bit_depth);
  });
  return {jobs.size(), jobs.size(), clips[0].height(), clips[0].width()};
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  fs::path data;           // a sequence directory, or a directory of them
  fs::path config;         // optional key = value file
  fs::path init;           // optional starting weights
  fs::path out;            // weights file
  fs::path log;            // defaults to <out>.log
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::size_t augment_copies = 0;
};

/// Sequence directories under root: root itself when it holds a manifest,
/// otherwise its immediate subdirectories that do, sorted by name.
inline std::vector<fs::path> find_sequences(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("dataset directory not found: " + root.string());
  if (fs::is_regular_file(root / kManifestName)) return {root};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::is_regular_file(e.path() / kManifestName)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no sequence directories (with " + std::string(kManifestName) + ") in " + root.string());
  return out;
}

/// Every segment of every sequence under root, with estimators read from
/// <sequence>/estimators.
inline std::vector<TrainSample<float>> load_training_samples(const fs::path& root) {
  std::vector<TrainSample<float>> samples;
  for (const auto& dir : find_sequences(root)) {
    const auto seq = load_sequence<float>(dir);
    for (std::size_t k = 0; k < seq.segment_count(); ++k) {
      samples.push_back(seq.sample(k, load_segment_estimators(dir / kEstimatorDirName, seq, k)));
    }
  }
  if (samples.empty()) throw InputError("dataset " + root.string() + " holds no complete segment");
  return samples;
}

inline TrainResult<float> cmd_train(const TrainOptions& o) {
  TrainConfig config = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
  if (o.steps) config.steps = *o.steps;
  if (o.seed) config.seed = *o.seed;
  auto samples = load_training_samples(o.data);
  const std::size_t base = samples.size();
  for (std::size_t c = 0; c < o.augment_copies; ++c)
    for (std::size_t i = 0; i < base; ++i) samples.push_back(augment(samples[i], config.seed + 1 + c * base + i, {}));

  Model<float> model = o.init.empty() ? Model<float>::initialised(config.model, config.seed) : Model<float>::load(o.init);
  const fs::path log_path = o.log.empty() ? fs::path(o.out.string() + ".log") : o.log;
  if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
  std::ofstream log(log_path);
  if (!log) throw InputError("cannot write " + log_path.string());
  auto result = train_fusion(model, samples, config, [&](const TrainStep& s) { log << format_step(s) << "\n" << std::flush; });
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  model.save(o.out);
  return result;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
  std::vector<fs::path> pred, gt;  // compared pairwise
  std::string clip = "clip";
  fs::path out;  // CSV; empty writes nothing
};

/// Per-frame PSNR and SSIM for frames present in the ground-truth
/// directory, followed by one "mean" row per pair.
inline std::vector<MetricRow> cmd_eval(const EvalOptions& o) {
  if (o.pred.empty() || o.pred.size() != o.gt.size()) {
    throw InputError("eval needs matching numbers of prediction and ground-truth directories");
  }
  std::vector<MetricRow> rows;
  for (std::size_t i = 0; i < o.pred.size(); ++i) {
    std::string view = o.pred[i].filename().string();
    if (view.empty()) view = o.pred[i].parent_path().filename().string();
    double sum_psnr = 0, sum_ssim = 0;
    const auto files = list_png(o.gt[i]);
    for (const auto& g : files) {
      const fs::path p = o.pred[i] / g.filename();
      if (!fs::is_regular_file(p)) throw InputError("missing prediction frame " + p.string());
      const auto a = load_png<float>(p), b = load_png<float>(g);
      const MetricRow r{o.clip, view, g.stem().string(), psnr(a, b), ssim(a, b)};
      sum_psnr += r.psnr;
      sum_ssim += r.ssim;
      rows.push_back(r);
    }
    const double n = static_cast<double>(files.size());
    rows.push_back({o.clip, view, "mean", sum_psnr / n, sum_ssim / n});
  }
  if (!o.out.empty()) write_text(o.out, to_csv(metric_table(rows)));
  return rows;
}

// ------------------------------------------------------------------ optima

struct OptimaOptions {
  fs::path input, out;
  RateView view = RateView::kLsr;
};

inline OptimaCurve cmd_optima(const OptimaOptions& o) {
  const auto pts = parse_rate_points(parse_csv(read_text(o.input), o.input.string()));
  auto curve = optima_curve(pts, o.view);
  write_text(o.out, plot_data(curve.vertices()));
  return curve;
}

// ------------------------------------------------------------ init-weights

struct InitOptions {
  fs::path out, config;
  std::uint64_t seed = 0;
  bool zero = false;
};

inline void cmd_init_weights(const InitOptions& o) {
  const TrainConfig config = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  Model<float>::initialised(config.model, o.seed, o.zero).save(o.out);
}

// ------------------------------------------------------------------- synth

struct SynthOptions {
  SynthSpec spec;
  fs::path out;
  int bit_depth = 16;
};

/// Writes a sequence directory plus exact estimators under out/estimators.
inline void cmd_synth(const SynthOptions& o) {
  const SynthScene<double> scene(o.spec);
  const auto seq = scene.sequence();
  save_sequence(o.out, seq, o.bit_depth);
  const std::size_t segments = seq.segment_count();
  for (std::size_t k = 0; k < segments; ++k) {
    fs::path dir = o.out / kEstimatorDirName;
    if (segments > 1) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "segment_%04zu", k);
      dir /= buf;
    }
    save_estimators(dir, scene.estimators(k * o.spec.interval));
  }
}

}  // namespace hstr::cli
