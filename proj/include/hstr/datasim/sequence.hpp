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

// On-disk hybrid sequences.
//
// A sequence directory holds zero-padded PNG frames in lsr/, hsr/ and,
// when ground truth is known, gt_left/ and gt_right/, plus manifest.txt:
//
//   # hstr-manifest 1
//   interval <m>
//   scale <s>
//   frame <view> <index> <timestamp> <relative path>
//
// view is lsr, hsr, gt_left or gt_right; index is the frame's position on
// the common time axis; timestamp is the ground-truth time (in frames) the
// payload was captured at, which differs from index when the streams are
// desynchronised.
//
// Segment k spans indices k*m .. (k+1)*m. Estimators for a single-segment
// sequence live directly in the estimator directory, otherwise in
// segment_<kkkk>/ subdirectories.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "hstr/core/image_io.hpp"
#include "hstr/pipeline/clip.hpp"

namespace hstr {

struct ManifestEntry {
  std::string view;
  std::size_t index = 0;
  double timestamp = 0;
  std::string path;
};

struct Manifest {
  std::size_t interval = 0;
  std::size_t scale = 0;
  std::vector<ManifestEntry> frames;
};

inline constexpr const char* kManifestHeader = "# hstr-manifest 1";
inline constexpr const char* kManifestName = "manifest.txt";

inline std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", index);
  return buf;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << kManifestHeader << "\n" << "interval " << m.interval << "\n" << "scale " << m.scale << "\n";
  for (const auto& f : m.frames) {
    char ts[64];
    std::snprintf(ts, sizeof ts, "%.6f", f.timestamp);
    out << "frame " << f.view << " " << f.index << " " << ts << " " << f.path << "\n";
  }
  if (!out) throw InputError("write failed: " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) throw FormatError(path.string() + ": not an hstr manifest");
  Manifest m;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    bool ok = true;
    if (key == "interval") {
      ok = static_cast<bool>(ss >> m.interval);
    } else if (key == "scale") {
      ok = static_cast<bool>(ss >> m.scale);
    } else if (key == "frame") {
      ManifestEntry e;
      ok = static_cast<bool>(ss >> e.view >> e.index >> e.timestamp >> e.path);
      if (ok) m.frames.push_back(std::move(e));
    } else {
      ok = false;
    }
    if (!ok) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed line '" + line + "'");
  }
  if (m.interval == 0 || m.scale == 0) throw FormatError(path.string() + ": interval and scale must be positive");
  return m;
}

template <typename T>
struct Sequence {
  std::size_t interval = 1;
  std::size_t scale = 1;
  std::vector<Frame<T>> lsr;
  std::map<std::size_t, Frame<T>> hsr;  // keyed by index
  std::vector<Frame<T>> gt_left, gt_right;
  std::vector<double> lsr_timestamps;

  std::size_t segment_count() const { return lsr.empty() ? 0 : (lsr.size() - 1) / interval; }
  bool has_ground_truth() const { return gt_left.size() == lsr.size() && gt_right.size() == lsr.size(); }

  ClipPair<T> segment(std::size_t k) const {
    if (k >= segment_count()) throw InputError("segment " + std::to_string(k) + " out of range");
    const std::size_t a = k * interval, b = a + interval;
    const auto ia = hsr.find(a), ib = hsr.find(b);
    if (ia == hsr.end() || ib == hsr.end()) {
      throw InputError("sequence lacks the HSR frames at indices " + std::to_string(a) + " and " + std::to_string(b));
    }
    ClipPair<T> clip;
    clip.lsr_frames.assign(lsr.begin() + static_cast<std::ptrdiff_t>(a), lsr.begin() + static_cast<std::ptrdiff_t>(b + 1));
    clip.hsr_endpoints = {ia->second, ib->second};
    clip.scale = scale;
    clip.validate();
    return clip;
  }

  TrainSample<T> sample(std::size_t k, EstimatorInputs<T> est) const {
    if (!has_ground_truth()) throw InputError("sequence has no ground truth for training");
    TrainSample<T> s{segment(k), std::move(est), {}, {}};
    const std::size_t a = k * interval;
    for (std::size_t t = 0; t <= interval; ++t) {
      s.gt_left.push_back(gt_left[a + t]);
      s.gt_right.push_back(gt_right[a + t]);
    }
    s.validate();
    return s;
  }
};

inline std::filesystem::path segment_estimator_dir(const std::filesystem::path& root, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "segment_%04zu", k);
  const auto sub = root / buf;
  if (std::filesystem::is_directory(sub)) return sub;
  if (k == 0) return root;
  throw InputError("missing estimator directory " + sub.string());
}

template <typename T>
EstimatorInputs<T> load_segment_estimators(const std::filesystem::path& root, const Sequence<T>& seq, std::size_t k) {
  return load_estimators<T>(segment_estimator_dir(root, k), seq.interval);
}

template <typename T>
void save_sequence(const std::filesystem::path& dir, const Sequence<T>& seq, int bit_depth = 8) {
  namespace fs = std::filesystem;
  Manifest m{seq.interval, seq.scale, {}};
  auto emit = [&](const std::string& view, std::size_t index, double ts, const Frame<T>& f) {
    fs::create_directories(dir / view);
    const std::string rel = view + "/" + frame_filename(index);
    save_png(dir / rel, f, bit_depth);
    m.frames.push_back({view, index, ts, rel});
  };
  for (std::size_t i = 0; i < seq.lsr.size(); ++i) {
    emit("lsr", i, i < seq.lsr_timestamps.size() ? seq.lsr_timestamps[i] : static_cast<double>(i), seq.lsr[i]);
  }
  for (const auto& [i, f] : seq.hsr) emit("hsr", i, static_cast<double>(i), f);
  for (std::size_t i = 0; i < seq.gt_left.size(); ++i) emit("gt_left", i, static_cast<double>(i), seq.gt_left[i]);
  for (std::size_t i = 0; i < seq.gt_right.size(); ++i) emit("gt_right", i, static_cast<double>(i), seq.gt_right[i]);
  write_manifest(dir / kManifestName, m);
}

template <typename T = float>
Sequence<T> load_sequence(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("sequence directory not found: " + dir.string());
  const Manifest m = read_manifest(dir / kManifestName);
  Sequence<T> seq;
  seq.interval = m.interval;
  seq.scale = m.scale;
  std::map<std::size_t, std::pair<Frame<T>, double>> lsr;
  std::map<std::size_t, Frame<T>> gl, gr;
  for (const auto& e : m.frames) {
    Frame<T> f = load_png<T>(dir / e.path);
    if (e.view == "lsr") {
      lsr[e.index] = {std::move(f), e.timestamp};
    } else if (e.view == "hsr") {
      seq.hsr[e.index] = std::move(f);
    } else if (e.view == "gt_left") {
      gl[e.index] = std::move(f);
    } else if (e.view == "gt_right") {
      gr[e.index] = std::move(f);
    } else {
      throw FormatError(dir.string() + ": unknown view '" + e.view + "' in manifest");
    }
  }
  auto dense = [&](auto& src, const char* view) {
    std::vector<Frame<T>> out;
    for (auto& [i, v] : src) {
      if (i != out.size()) throw FormatError(dir.string() + ": " + view + " frame indices are not contiguous");
      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Frame<T>>) {
        out.push_back(std::move(v));
      } else {
        out.push_back(std::move(v.first));
        seq.lsr_timestamps.push_back(v.second);
      }
    }
    return out;
  };
  seq.lsr = dense(lsr, "lsr");
  seq.gt_left = dense(gl, "gt_left");
  seq.gt_right = dense(gr, "gt_right");
  if (seq.lsr.empty()) throw FormatError(dir.string() + ": manifest lists no LSR frames");
  return seq;
}

}  // namespace hstr
