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

// CSV reports and two-column plot data. Reals are written with four
// decimals; infinities as "inf" / "-inf".

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hstr/eval/optima.hpp"

namespace hstr {

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline double parse_real(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw FormatError("not a number: '" + s + "'");
  return v;
}

using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;
};

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&](const CsvRow& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].find_first_of(",\n\"") != std::string::npos) throw InputError("CSV field may not contain , \" or newline");
      out += (i ? "," : "") + r[i];
    }
    out += "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw InputError("CSV row width differs from header");
    line(r);
  }
  return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& name = "<csv>") {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    CsvRow row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (line.back() == ',') row.emplace_back();
    if (first) {
      t.header = std::move(row);
      first = false;
    } else {
      if (row.size() != t.header.size()) throw FormatError(name + ": row width differs from header");
      t.rows.push_back(std::move(row));
    }
  }
  if (first) throw FormatError(name + ": empty CSV");
  return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Per-frame metric report.
struct MetricRow {
  std::string clip, view;
  std::string frame;  // frame file stem, or "mean"
  double psnr = 0, ssim = 0;
};

inline const CsvRow& metric_header() {
  static const CsvRow h{"clip", "view", "frame", "psnr", "ssim"};
  return h;
}

inline CsvTable metric_table(const std::vector<MetricRow>& rows) {
  CsvTable t{metric_header(), {}};
  for (const auto& r : rows) t.rows.push_back({r.clip, r.view, r.frame, format_real(r.psnr), format_real(r.ssim)});
  return t;
}

/// Rate points: s, m, then both PSNRs; the volume column is derived.
inline const CsvRow& rate_header() {
  static const CsvRow h{"spatial_factor", "temporal_factor", "volume", "psnr_lsr", "psnr_hsr"};
  return h;
}

inline CsvTable rate_table(const std::vector<RatePoint>& pts) {
  CsvTable t{rate_header(), {}};
  for (const auto& p : pts) {
    t.rows.push_back({format_real(p.spatial_factor), format_real(p.temporal_factor), format_real(p.volume),
                      format_real(p.psnr_lsr), format_real(p.psnr_hsr)});
  }
  return t;
}

/// Reads rate points; the volume column is optional and recomputed.
inline std::vector<RatePoint> parse_rate_points(const CsvTable& t) {
  auto col = [&](const std::string& name, bool required) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == name) return static_cast<std::ptrdiff_t>(i);
    if (required) throw FormatError("rate CSV lacks column '" + name + "'");
    return -1;
  };
  const auto cs = col("spatial_factor", true), cm = col("temporal_factor", true);
  const auto cl = col("psnr_lsr", true), ch = col("psnr_hsr", true);
  std::vector<RatePoint> out;
  for (const auto& r : t.rows) {
    out.push_back(make_rate_point(parse_real(r[static_cast<std::size_t>(cs)]), parse_real(r[static_cast<std::size_t>(cm)]),
                                  parse_real(r[static_cast<std::size_t>(cl)]), parse_real(r[static_cast<std::size_t>(ch)])));
  }
  return out;
}

/// "x y" per line under a one-line comment naming the columns.
inline std::string plot_data(const std::vector<CurvePoint>& pts, const std::string& x_name = "volume",
                             const std::string& y_name = "psnr") {
  std::string out = "# " + x_name + " " + y_name + "\n";
  for (const auto& p : pts) out += format_real(p.volume) + " " + format_real(p.psnr) + "\n";
  return out;
}

}  // namespace hstr
